#include "talkit/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "talkit/errors.hpp"

namespace talkit {

namespace {

using nlohmann::ordered_json;

constexpr char kFeatureMagic[4] = {'T', 'K', 'F', 'T'};
constexpr uint32_t kFeatureVersion = 1;
constexpr uint32_t kAnnotationVersion = 1;
constexpr uint32_t kManifestVersion = 1;

void write_u32(std::ostream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

uint32_t read_u32(std::istream& in, const std::string& what) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw FormatError("truncated while reading " + what);
  return v;
}

ordered_json parse_json_file(const std::filesystem::path& path, const char* kind) {
  std::ifstream in(path);
  if (!in) throw FormatError(std::string("cannot open ") + kind + " file: " + path.string());
  ordered_json doc;
  try {
    doc = ordered_json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const ordered_json::parse_error& e) {
    throw FormatError(std::string(kind) + " file " + path.string() + ": " + e.what());
  }
  return doc;
}

void reject_unknown_keys(const ordered_json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* key : allowed)
      if (it.key() == key) known = true;
    if (!known) throw FormatError("unknown key '" + it.key() + "' in " + where);
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw FormatError("failed writing: " + path.string());
}

}  // namespace

std::string format_double(double value) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc())
    throw NumericError("failed to format a double");
  return std::string(buf, ptr);
}

void write_feature_file(const std::filesystem::path& path, const Tensor& features) {
  if (features.shape().rank != 2) throw ShapeError("feature tensor must be rank-2 (T, C)");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open feature file for writing: " + path.string());
  out.write(kFeatureMagic, sizeof(kFeatureMagic));
  write_u32(out, kFeatureVersion);
  write_u32(out, static_cast<uint32_t>(features.shape().rows));
  write_u32(out, static_cast<uint32_t>(features.shape().cols));
  std::vector<float> row(static_cast<size_t>(features.shape().cols));
  for (int t = 0; t < features.shape().rows; ++t) {
    for (int c = 0; c < features.shape().cols; ++c)
      row[static_cast<size_t>(c)] = static_cast<float>(features.at(t, c));
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!out) throw FormatError("failed writing feature file: " + path.string());
}

Tensor read_feature_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open feature file: " + path.string());
  char magic[4] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kFeatureMagic, sizeof(magic)) != 0)
    throw FormatError("not a feature file (bad magic): " + path.string());
  uint32_t version = read_u32(in, "feature version");
  if (version != kFeatureVersion)
    throw FormatError("unsupported feature file version " + std::to_string(version));
  uint32_t frames = read_u32(in, "frame count");
  uint32_t channels = read_u32(in, "channel count");
  Tensor features(Shape::matrix(static_cast<int>(frames), static_cast<int>(channels)));
  std::vector<float> row(channels);
  for (uint32_t t = 0; t < frames; ++t) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(float)));
    if (!in) throw FormatError("feature file truncated: " + path.string());
    for (uint32_t c = 0; c < channels; ++c)
      features.at(static_cast<int>(t), static_cast<int>(c)) = row[c];
  }
  return features;
}

const VideoAnnotation* DatasetAnnotations::find(const std::string& name) const {
  for (const VideoAnnotation& v : videos)
    if (v.name == name) return &v;
  return nullptr;
}

void write_annotations(const std::filesystem::path& path, const DatasetAnnotations& dataset) {
  ordered_json doc;
  doc["version"] = kAnnotationVersion;
  doc["classes"] = dataset.classes;
  ordered_json videos = ordered_json::array();
  for (const VideoAnnotation& video : dataset.videos) {
    ordered_json v;
    v["name"] = video.name;
    v["num_frames"] = video.num_frames;
    v["fps"] = video.fps;
    v["split"] = video.split;
    ordered_json instances = ordered_json::array();
    for (const ActionInstance& inst : video.instances) {
      if (inst.class_id < 0 || static_cast<size_t>(inst.class_id) >= dataset.classes.size())
        throw DataError("instance class id " + std::to_string(inst.class_id) +
                        " has no class name");
      ordered_json entry;
      entry["start_frame"] = inst.start_frame;
      entry["end_frame"] = inst.end_frame;
      entry["class_name"] = dataset.classes[static_cast<size_t>(inst.class_id)];
      instances.push_back(entry);
    }
    v["instances"] = instances;
    videos.push_back(v);
  }
  doc["videos"] = videos;
  write_text_file(path, doc.dump(2) + "\n");
}

DatasetAnnotations read_annotations(const std::filesystem::path& path) {
  ordered_json doc = parse_json_file(path, "annotation");
  try {
    reject_unknown_keys(doc, {"version", "classes", "videos"}, "annotation document");
    if (doc.at("version").get<uint32_t>() != kAnnotationVersion)
      throw FormatError("unsupported annotation version");
    DatasetAnnotations dataset;
    dataset.classes = doc.at("classes").get<std::vector<std::string>>();
    for (const ordered_json& v : doc.at("videos")) {
      reject_unknown_keys(v, {"name", "num_frames", "fps", "split", "instances"},
                          "video annotation");
      VideoAnnotation video;
      video.name = v.at("name").get<std::string>();
      video.num_frames = v.at("num_frames").get<int>();
      video.fps = v.at("fps").get<double>();
      video.split = v.at("split").get<std::string>();
      for (const ordered_json& inst : v.at("instances")) {
        reject_unknown_keys(inst, {"start_frame", "end_frame", "class_name"}, "instance");
        std::string class_name = inst.at("class_name").get<std::string>();
        auto it = std::find(dataset.classes.begin(), dataset.classes.end(), class_name);
        if (it == dataset.classes.end())
          throw FormatError("instance class '" + class_name + "' is not in the class list");
        video.instances.push_back({inst.at("start_frame").get<int>(),
                                   inst.at("end_frame").get<int>(),
                                   static_cast<int>(it - dataset.classes.begin())});
      }
      video.annotation_set().validate();
      dataset.videos.push_back(std::move(video));
    }
    return dataset;
  } catch (const ordered_json::exception& e) {
    throw FormatError("annotation file " + path.string() + ": " + e.what());
  }
}

void write_proposals(const std::filesystem::path& path,
                     const std::vector<VideoProposals>& videos) {
  std::ostringstream out;
  out << "# talkit proposals v1\n";
  out << "# video_id\tstart\tend\tscore\tclass\n";
  for (const VideoProposals& video : videos) {
    for (const Proposal& prop : video.proposals) {
      out << video.video_id << '\t' << format_double(prop.start) << '\t'
          << format_double(prop.end) << '\t' << format_double(prop.score) << '\t';
      if (prop.class_id < 0)
        out << '-';
      else
        out << prop.class_id;
      out << '\n';
    }
  }
  write_text_file(path, out.str());
}

std::vector<VideoProposals> read_proposals(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open proposal file: " + path.string());
  std::vector<VideoProposals> videos;
  std::string line;
  long line_number = 0;
  auto fail = [&](const std::string& why) {
    throw FormatError("proposal file " + path.string() + " line " + std::to_string(line_number) +
                      ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    size_t begin = 0;
    while (true) {
      size_t tab = line.find('\t', begin);
      fields.push_back(line.substr(begin, tab == std::string::npos ? tab : tab - begin));
      if (tab == std::string::npos) break;
      begin = tab + 1;
    }
    if (fields.size() != 5) fail("expected 5 tab-separated fields, got " +
                                 std::to_string(fields.size()));
    Proposal prop;
    auto parse_real = [&](const std::string& text, const char* what) {
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
      if (ec != std::errc() || ptr != text.data() + text.size())
        fail(std::string("cannot parse ") + what + " '" + text + "'");
      return value;
    };
    prop.start = parse_real(fields[1], "start");
    prop.end = parse_real(fields[2], "end");
    prop.score = parse_real(fields[3], "score");
    if (fields[4] == "-") {
      prop.class_id = -1;
    } else {
      int value = 0;
      auto [ptr, ec] = std::from_chars(fields[4].data(), fields[4].data() + fields[4].size(), value);
      if (ec != std::errc() || ptr != fields[4].data() + fields[4].size() || value < 0)
        fail("cannot parse class '" + fields[4] + "'");
      prop.class_id = value;
    }
    if (fields[0].empty()) fail("empty video id");
    if (videos.empty() || videos.back().video_id != fields[0]) {
      for (const VideoProposals& seen : videos)
        if (seen.video_id == fields[0]) fail("video '" + fields[0] + "' appears in two groups");
      videos.push_back({fields[0], {}});
    }
    videos.back().proposals.push_back(prop);
  }
  return videos;
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  ordered_json doc;
  doc["version"] = kManifestVersion;
  doc["seed"] = manifest.seed;
  doc["num_train"] = manifest.num_train;
  doc["num_test"] = manifest.num_test;
  ordered_json videos = ordered_json::array();
  for (const ManifestEntry& entry : manifest.videos) {
    ordered_json v;
    v["name"] = entry.name;
    v["file"] = entry.file;
    v["split"] = entry.split;
    v["seed"] = entry.seed;
    videos.push_back(v);
  }
  doc["videos"] = videos;
  write_text_file(path, doc.dump(2) + "\n");
}

Manifest read_manifest(const std::filesystem::path& path) {
  ordered_json doc = parse_json_file(path, "manifest");
  try {
    reject_unknown_keys(doc, {"version", "seed", "num_train", "num_test", "videos"}, "manifest");
    if (doc.at("version").get<uint32_t>() != kManifestVersion)
      throw FormatError("unsupported manifest version");
    Manifest manifest;
    manifest.seed = doc.at("seed").get<uint64_t>();
    manifest.num_train = doc.at("num_train").get<int>();
    manifest.num_test = doc.at("num_test").get<int>();
    for (const ordered_json& v : doc.at("videos")) {
      reject_unknown_keys(v, {"name", "file", "split", "seed"}, "manifest video");
      manifest.videos.push_back({v.at("name").get<std::string>(), v.at("file").get<std::string>(),
                                 v.at("split").get<std::string>(), v.at("seed").get<uint64_t>()});
    }
    return manifest;
  } catch (const ordered_json::exception& e) {
    throw FormatError("manifest file " + path.string() + ": " + e.what());
  }
}

std::string loss_log_line(long step, int epoch, const LossReport& report) {
  ordered_json line;
  line["step"] = step;
  line["epoch"] = epoch;
  line["l_continue"] = report.l_continue;
  line["l_start"] = report.l_start;
  line["l_end"] = report.l_end;
  line["l_cls"] = report.l_cls;
  line["l_reg"] = report.l_reg;
  line["l_intra_continue"] = report.l_intra_continue;
  line["l_intra_start"] = report.l_intra_start;
  line["l_intra_end"] = report.l_intra_end;
  line["l_intra"] = report.l_intra;
  line["l_inter"] = report.l_inter;
  line["l_total"] = report.l_total;
  return line.dump();
}

}  // namespace talkit

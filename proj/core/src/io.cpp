#include "attrinf/io.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "attrinf/common.hpp"

namespace attrinf {

using json = nlohmann::ordered_json;

namespace {

json header_to_json(const ArtifactHeader& h) {
  json j;
  j["type"] = "header";
  j["kind"] = h.kind;
  j["config_hash"] = h.config_hash;
  j["seed"] = h.seed;
  if (h.kind == "dataset") {
    j["split"] = h.split;
    j["sequence_length"] = h.sequence_length;
    j["slot_duration_ms"] = h.slot_duration_ms;
  } else if (h.kind == "decisions") {
    j["attribute"] = h.attribute;
    j["threshold"] = h.threshold;
  }
  return j;
}

ArtifactHeader header_from_json(const json& j, const std::string& path) {
  if (!j.contains("type") || j.at("type") != "header")
    throw ValidationError("first line of " + path + " is not a header record");
  ArtifactHeader h;
  h.kind = j.value("kind", "");
  h.config_hash = j.value("config_hash", "");
  h.seed = j.value("seed", std::uint64_t{0});
  h.split = j.value("split", "");
  h.attribute = j.value("attribute", "");
  h.threshold = j.value("threshold", 0.0);
  h.sequence_length = j.value("sequence_length", 0);
  h.slot_duration_ms = j.value("slot_duration_ms", 0);
  return h;
}

std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw MissingArtifactError("artifact not found: " + path.string());
  return is;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot write artifact: " + path.string());
  return os;
}

json optional_to_json(const std::optional<double>& v) {
  if (v) return *v;
  return nullptr;
}

std::optional<double> optional_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json bin_to_json(const BinRow& b) {
  json j;
  j["lo"] = b.lo;
  j["hi"] = b.hi;
  j["count"] = b.count;
  j["p_int"] = b.p_int;
  j["p_conf"] = b.p_conf;
  j["acc_int"] = optional_to_json(b.acc_int);
  j["mean_confidence"] = optional_to_json(b.mean_confidence);
  return j;
}

BinRow bin_from_json(const json& j) {
  BinRow b;
  b.lo = j.at("lo").get<double>();
  b.hi = j.at("hi").get<double>();
  b.count = j.at("count").get<std::int64_t>();
  b.p_int = j.at("p_int").get<double>();
  b.p_conf = j.at("p_conf").get<double>();
  b.acc_int = optional_from_json(j.at("acc_int"));
  b.mean_confidence = optional_from_json(j.at("mean_confidence"));
  return b;
}

json attribute_report_to_json(const AttributeReport& r) {
  json j;
  j["attribute"] = r.attribute;
  j["num_samples"] = r.num_samples;
  j["threshold"] = r.threshold;
  j["overall_accuracy"] = r.overall_accuracy;
  json bins = json::array();
  for (const BinRow& b : r.bins) bins.push_back(bin_to_json(b));
  j["bins"] = std::move(bins);
  j["phc"] = r.subset.phc;
  j["precision"] = optional_to_json(r.subset.precision);
  j["recall"] = optional_to_json(r.subset.recall);
  j["f1"] = optional_to_json(r.subset.f1);
  j["subset_accuracy"] = optional_to_json(r.subset.accuracy);
  j["pearson_r"] = optional_to_json(r.pearson_r);
  j["baseline_accuracy"] = r.baseline_accuracy;
  j["chi_square_statistic"] = r.chi_square_vs_baseline.statistic;
  j["chi_square_p_value"] = r.chi_square_vs_baseline.p_value;
  return j;
}

AttributeReport attribute_report_from_json(const json& j) {
  AttributeReport r;
  r.attribute = j.at("attribute").get<std::string>();
  r.num_samples = j.at("num_samples").get<std::int64_t>();
  r.threshold = j.at("threshold").get<double>();
  r.overall_accuracy = j.at("overall_accuracy").get<double>();
  for (const auto& b : j.at("bins")) r.bins.push_back(bin_from_json(b));
  r.subset.phc = j.at("phc").get<double>();
  r.subset.precision = optional_from_json(j.at("precision"));
  r.subset.recall = optional_from_json(j.at("recall"));
  r.subset.f1 = optional_from_json(j.at("f1"));
  r.subset.accuracy = optional_from_json(j.at("subset_accuracy"));
  r.pearson_r = optional_from_json(j.at("pearson_r"));
  r.baseline_accuracy = j.at("baseline_accuracy").get<double>();
  r.chi_square_vs_baseline.statistic =
      j.at("chi_square_statistic").get<double>();
  r.chi_square_vs_baseline.p_value = j.at("chi_square_p_value").get<double>();
  return r;
}

}  // namespace

void write_dataset(const std::filesystem::path& path,
                   const ArtifactHeader& header,
                   const std::vector<LabeledSample>& samples) {
  std::ofstream os = open_for_write(path);
  os << header_to_json(header).dump() << "\n";
  for (const LabeledSample& s : samples) {
    if (!s.labels.complete())
      throw ValidationError("refusing to write sample with a partial label "
                            "map (user " + s.user_id + ")");
    json j;
    j["user_id"] = s.user_id;
    j["sample_index"] = s.sample_index;
    json labels = json::object();
    for (AttributeKind kind : kAllAttributes)
      labels[std::string(attribute_name(kind))] = s.labels.at(kind);
    j["labels"] = std::move(labels);
    json mini = json::array();
    for (const MiniHRecord& r : s.sample.mini_h())
      mini.push_back({r.miniapp_id, r.category_code, r.access_count});
    j["mini_h"] = std::move(mini);
    j["op_h"] = s.sample.op_h().slots;
    os << j.dump() << "\n";
  }
  if (!os) throw ValidationError("failed writing dataset: " + path.string());
}

std::vector<LabeledSample> read_dataset(const std::filesystem::path& path,
                                        ArtifactHeader* header_out) {
  std::ifstream is = open_for_read(path);
  std::string line;
  if (!std::getline(is, line))
    throw ValidationError("empty dataset file: " + path.string());
  ArtifactHeader header = header_from_json(json::parse(line), path.string());
  if (header_out) *header_out = header;

  std::vector<LabeledSample> out;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                            ": bad record: " + e.what());
    }
    LabelMap labels;
    if (j.contains("labels") && !j.at("labels").is_null()) {
      for (const auto& [name, idx] : j.at("labels").items()) {
        AttributeKind kind = attribute_from_name(name);
        labels.set(make_label(kind, idx.get<int>()));
      }
    }
    std::vector<MiniHRecord> mini;
    for (const auto& r : j.at("mini_h"))
      mini.push_back(MiniHRecord{r.at(0).get<int>(), r.at(1).get<int>(),
                                 r.at(2).get<std::int64_t>()});
    OpHTimeline op;
    op.slots = j.at("op_h").get<std::vector<int>>();
    op.slot_duration_ms = header.slot_duration_ms > 0
                              ? header.slot_duration_ms
                              : op.slot_duration_ms;
    int n = static_cast<int>(op.slots.size());
    LabeledSample sample{j.at("user_id").get<std::string>(),
                         j.value("sample_index", 0),
                         fuse(std::move(mini), std::move(op), n),
                         std::move(labels)};
    out.push_back(std::move(sample));
  }
  return out;
}

void write_decisions(const std::filesystem::path& path,
                     const ArtifactHeader& header,
                     const std::vector<DecisionRecord>& records) {
  std::ofstream os = open_for_write(path);
  os << header_to_json(header).dump() << "\n";
  for (const DecisionRecord& r : records) {
    json j;
    j["user_id"] = r.user_id;
    j["sample_index"] = r.sample_index;
    j["outcome"] = r.unknown ? "unknown" : "label";
    if (!r.unknown) j["class_index"] = r.class_index;
    j["argmax"] = r.argmax;
    j["confidence"] = r.confidence;
    os << j.dump() << "\n";
  }
  if (!os) throw ValidationError("failed writing decisions: " + path.string());
}

std::vector<DecisionRecord> read_decisions(const std::filesystem::path& path,
                                           ArtifactHeader* header_out) {
  std::ifstream is = open_for_read(path);
  std::string line;
  if (!std::getline(is, line))
    throw ValidationError("empty decision file: " + path.string());
  ArtifactHeader header = header_from_json(json::parse(line), path.string());
  if (header_out) *header_out = header;

  std::vector<DecisionRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    DecisionRecord r;
    r.user_id = j.at("user_id").get<std::string>();
    r.sample_index = j.at("sample_index").get<int>();
    r.unknown = j.at("outcome").get<std::string>() == "unknown";
    r.class_index = r.unknown ? -1 : j.at("class_index").get<int>();
    r.argmax = j.at("argmax").get<int>();
    r.confidence = j.at("confidence").get<double>();
    out.push_back(std::move(r));
  }
  return out;
}

void write_eval_report(const std::filesystem::path& path,
                       const EvalReportFile& report) {
  json j;
  j["config_hash"] = report.config_hash;
  j["seed"] = report.seed;
  j["average_accuracy"] = report.average_accuracy;
  j["average_phc"] = report.average_phc;
  json attrs = json::array();
  for (const AttributeReport& r : report.attributes)
    attrs.push_back(attribute_report_to_json(r));
  j["attributes"] = std::move(attrs);
  std::ofstream os = open_for_write(path);
  os << j.dump(2) << "\n";
  if (!os) throw ValidationError("failed writing report: " + path.string());
}

EvalReportFile read_eval_report(const std::filesystem::path& path) {
  std::ifstream is = open_for_read(path);
  json j = json::parse(is);
  EvalReportFile r;
  r.config_hash = j.at("config_hash").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.average_accuracy = j.at("average_accuracy").get<double>();
  r.average_phc = j.at("average_phc").get<double>();
  for (const auto& a : j.at("attributes"))
    r.attributes.push_back(attribute_report_from_json(a));
  return r;
}

void write_bins_csv(const std::filesystem::path& path,
                    const EvalReportFile& report) {
  std::ofstream os = open_for_write(path);
  os << "attribute,bin_lo,bin_hi,count,p_int,p_conf,acc_int,mean_confidence\n";
  for (const AttributeReport& r : report.attributes) {
    for (const BinRow& b : r.bins) {
      os << r.attribute << "," << b.lo << "," << b.hi << "," << b.count << ","
         << b.p_int << "," << b.p_conf << ",";
      if (b.acc_int) os << *b.acc_int;
      os << ",";
      if (b.mean_confidence) os << *b.mean_confidence;
      os << "\n";
    }
  }
}

void write_plot_description(const std::filesystem::path& path,
                            const EvalReportFile& report) {
  json j;
  j["config_hash"] = report.config_hash;
  j["seed"] = report.seed;
  json attrs = json::object();
  for (const AttributeReport& r : report.attributes) {
    json a;
    json centers = json::array(), p_int = json::array(),
         p_conf = json::array(), acc = json::array();
    for (const BinRow& b : r.bins) {
      centers.push_back((b.lo + b.hi) / 2.0);
      p_int.push_back(b.p_int);
      p_conf.push_back(b.p_conf);
      acc.push_back(optional_to_json(b.acc_int));
    }
    a["bin_centers"] = std::move(centers);
    a["bars"] = {{"p_int", std::move(p_int)}, {"p_conf", std::move(p_conf)}};
    a["line"] = {{"acc_int", std::move(acc)}};
    a["overall_accuracy"] = r.overall_accuracy;
    a["baseline_accuracy"] = r.baseline_accuracy;
    attrs[r.attribute] = std::move(a);
  }
  j["attributes"] = std::move(attrs);
  std::ofstream os = open_for_write(path);
  os << j.dump(2) << "\n";
}

void write_ablation_report(const std::filesystem::path& path,
                           const std::string& config_hash, std::uint64_t seed,
                           const AblationGrid& grid) {
  json j;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  json cells = json::array();
  for (const AblationCell& c : grid.cells) {
    json cj;
    cj["dimension"] = c.dimension;
    cj["threshold"] = c.threshold;
    cj["input_mode"] = std::string(input_mode_name(c.input_mode));
    cj["sequence_length"] = c.sequence_length;
    cj["attribute"] = c.attribute;
    cj["status"] = c.failed ? "failed" : "ok";
    if (c.failed)
      cj["error"] = c.error;
    else
      cj["report"] = attribute_report_to_json(c.report);
    cells.push_back(std::move(cj));
  }
  j["cells"] = std::move(cells);
  std::ofstream os = open_for_write(path);
  os << j.dump(2) << "\n";
}

AblationGrid read_ablation_report(const std::filesystem::path& path) {
  std::ifstream is = open_for_read(path);
  json j = json::parse(is);
  AblationGrid grid;
  for (const auto& cj : j.at("cells")) {
    AblationCell c;
    c.dimension = cj.at("dimension").get<std::string>();
    c.threshold = cj.at("threshold").get<double>();
    c.input_mode = input_mode_from_name(cj.at("input_mode").get<std::string>());
    c.sequence_length = cj.at("sequence_length").get<int>();
    c.attribute = cj.at("attribute").get<std::string>();
    c.failed = cj.at("status").get<std::string>() == "failed";
    if (c.failed)
      c.error = cj.value("error", "");
    else
      c.report = attribute_report_from_json(cj.at("report"));
    grid.cells.push_back(std::move(c));
  }
  return grid;
}

void write_cells_csv(const std::filesystem::path& path,
                     const AblationGrid& grid) {
  std::ofstream os = open_for_write(path);
  os << "dimension,threshold,input_mode,sequence_length,attribute,status,"
        "overall_accuracy,phc,subset_accuracy\n";
  for (const AblationCell& c : grid.cells) {
    os << c.dimension << "," << c.threshold << ","
       << input_mode_name(c.input_mode) << "," << c.sequence_length << ","
       << c.attribute << "," << (c.failed ? "failed" : "ok") << ",";
    if (!c.failed) {
      os << c.report.overall_accuracy << "," << c.report.subset.phc << ",";
      if (c.report.subset.accuracy) os << *c.report.subset.accuracy;
    } else {
      os << ",,";
    }
    os << "\n";
  }
}

std::string format_eval_report(const EvalReportFile& report) {
  std::ostringstream os;
  os << "config " << report.config_hash << "  seed " << report.seed << "\n";
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-10s %8s %8s %9s %9s %9s %8s %9s\n",
                "attribute", "acc", "baseline", "phc", "subset", "f1",
                "pearson", "chi2_p");
  os << buf;
  for (const AttributeReport& r : report.attributes) {
    auto opt = [](const std::optional<double>& v) {
      return v ? *v : std::nan("");
    };
    std::snprintf(buf, sizeof(buf),
                  "%-10s %8.4f %8.4f %9.4f %9.4f %9.4f %8.4f %9.2e\n",
                  r.attribute.c_str(), r.overall_accuracy, r.baseline_accuracy,
                  r.subset.phc, opt(r.subset.accuracy), opt(r.subset.f1),
                  opt(r.pearson_r), r.chi_square_vs_baseline.p_value);
    os << buf;
  }
  std::snprintf(buf, sizeof(buf), "average accuracy %.4f, average phc %.4f\n",
                report.average_accuracy, report.average_phc);
  os << buf;
  return os.str();
}

}  // namespace attrinf

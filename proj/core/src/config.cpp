#include "attrinf/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "attrinf/common.hpp"
#include "attrinf/rng.hpp"

namespace attrinf {

using json = nlohmann::ordered_json;

namespace {

void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                         const std::string& context) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!known.count(key))
      throw ValidationError("unknown config key '" + context + key + "'");
  }
}

template <typename T>
void maybe(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

std::array<std::vector<double>, kNumAttributes> parse_marginals(
    const json& obj) {
  auto m = default_marginals();
  for (const auto& [key, value] : obj.items()) {
    AttributeKind kind = attribute_from_name(key);
    m[static_cast<int>(kind)] = value.get<std::vector<double>>();
  }
  return m;
}

json marginals_to_json(
    const std::array<std::vector<double>, kNumAttributes>& m) {
  json out = json::object();
  for (AttributeKind kind : kAllAttributes)
    out[std::string(attribute_name(kind))] = m[static_cast<int>(kind)];
  return out;
}

PersonaSet parse_personas(const json& obj) {
  PersonaSet set = default_personas();
  for (const auto& [key, value] : obj.items()) {
    auto dot = key.find('.');
    if (dot == std::string::npos)
      throw ValidationError("persona key must be '<attribute>.<class>', got '" +
                            key + "'");
    AttributeKind kind = attribute_from_name(key.substr(0, dot));
    int cls = class_from_name(kind, key.substr(dot + 1));
    PersonaSpec& spec = set.at(kind, cls);
    reject_unknown_keys(value,
                        {"category_affinity", "miniapp_breadth", "click_rate",
                         "special_button_rates"},
                        "personas." + key + ".");
    if (value.contains("category_affinity")) {
      spec.category_affinity.clear();
      for (const auto& [code, mean] : value.at("category_affinity").items())
        spec.category_affinity[std::stoi(code)] = mean.get<double>();
    }
    maybe(value, "miniapp_breadth", spec.miniapp_breadth);
    maybe(value, "click_rate", spec.click_rate);
    if (value.contains("special_button_rates")) {
      spec.special_button_rates.clear();
      for (const auto& [role, mean] :
           value.at("special_button_rates").items()) {
        ButtonRole r;
        if (role == "payment")
          r = ButtonRole::Payment;
        else if (role == "back")
          r = ButtonRole::Back;
        else if (role == "password_free_payment")
          r = ButtonRole::PasswordFreePayment;
        else
          throw ValidationError("unknown button role '" + role + "'");
        spec.special_button_rates[r] = mean.get<double>();
      }
    }
  }
  set.validate();
  return set;
}

json personas_to_json(const PersonaSet& set) {
  json out = json::object();
  for (AttributeKind kind : kAllAttributes) {
    for (int c = 0; c < class_count(kind); ++c) {
      const PersonaSpec& spec = set.at(kind, c);
      json p;
      json aff = json::object();
      for (const auto& [code, mean] : spec.category_affinity)
        aff[std::to_string(code)] = mean;
      p["category_affinity"] = std::move(aff);
      p["miniapp_breadth"] = spec.miniapp_breadth;
      p["click_rate"] = spec.click_rate;
      json rates = json::object();
      for (const auto& [role, mean] : spec.special_button_rates)
        rates[std::string(button_role_name(role))] = mean;
      p["special_button_rates"] = std::move(rates);
      out[std::string(attribute_name(kind)) + "." +
          std::string(class_name(kind, c))] = std::move(p);
    }
  }
  return out;
}

}  // namespace

void RunConfig::validate() const {
  if (out_dir.empty()) throw ValidationError("out_dir must not be empty");
  if (catalog.num_miniapps < kNumCategories)
    throw ValidationError("catalog.num_miniapps must be >= 28");
  if (catalog.num_buttons < kNumSpecialRoles + 1)
    throw ValidationError(
        "catalog.num_buttons must be >= 4 (three special roles plus at least "
        "one generic button)");
  if (sequence_length < 1)
    throw ValidationError("sequence_length must be positive");
  if (slot_duration_ms < 1)
    throw ValidationError("slot_duration_ms must be positive");
  if (!(threshold > 0.0 && threshold < 1.0))
    throw ValidationError("threshold must lie in (0, 1)");
  if (attributes.empty())
    throw ValidationError("attributes list must not be empty");
  if (population.train_users <= 0 || population.validation_users <= 0 ||
      population.test_users <= 0)
    throw ValidationError("population sizes must be positive");
  // Delegates marginal/signal checks.
  population_spec(population.train_users).validate();
  personas.validate();
  for (AttributeKind kind : attributes) architecture(kind).validate();
  if (training.epochs < 1) throw ValidationError("training.epochs must be >= 1");
  if (training.batch_size < 1)
    throw ValidationError("training.batch_size must be >= 1");
  if (!(training.dropout >= 0.0 && training.dropout < 1.0))
    throw ValidationError("training.dropout must lie in [0, 1)");
  for (double t : ablation.thresholds)
    if (!(t > 0.0 && t < 1.0))
      throw ValidationError("ablation.thresholds must lie in (0, 1)");
  for (int n : ablation.sequence_lengths)
    if (n < 1) throw ValidationError("ablation.sequence_lengths must be positive");
  if (ablation.workers < 1)
    throw ValidationError("ablation.workers must be >= 1");
}

PopulationSpec RunConfig::population_spec(int num_users) const {
  PopulationSpec spec;
  spec.marginals = population.marginals;
  spec.num_users = num_users;
  spec.samples_per_user = population.samples_per_user;
  spec.signal_strength = population.signal_strength;
  spec.seed = seed;
  return spec;
}

GenOptions RunConfig::gen_options() const {
  GenOptions opts;
  opts.shared_mini_h = population.shared_mini_h;
  opts.background_category_rate = population.background_category_rate;
  opts.sequence_length = sequence_length;
  opts.slot_duration_ms = slot_duration_ms;
  return opts;
}

ArchitectureSpec RunConfig::architecture(AttributeKind kind) const {
  ArchitectureSpec arch;
  arch.family = model.family;
  arch.depth = model.depth;
  arch.width = model.width;
  arch.heads = model.heads;
  arch.ffn_multiplier = model.ffn_multiplier;
  arch.conv_taps = model.conv_taps;
  arch.output_classes = class_count(kind);
  arch.sequence_length = sequence_length;
  arch.embedding_dims = model.embedding_dims;
  return arch;
}

TrainHyper RunConfig::train_hyper(AttributeKind kind) const {
  TrainHyper hyper;
  hyper.optimizer = training.optimizer;
  hyper.learning_rate = training.learning_rate;
  hyper.epochs = training.epochs;
  hyper.batch_size = training.batch_size;
  hyper.dropout = training.dropout;
  hyper.seed = substream_seed(seed, "train", static_cast<int>(kind));
  return hyper;
}

std::string RunConfig::to_json_string(int indent) const {
  json j;
  j["seed"] = seed;
  j["out_dir"] = out_dir;
  j["catalog"] = {{"num_miniapps", catalog.num_miniapps},
                  {"num_buttons", catalog.num_buttons}};
  j["population"] = {
      {"train_users", population.train_users},
      {"validation_users", population.validation_users},
      {"test_users", population.test_users},
      {"samples_per_user", population.samples_per_user},
      {"signal_strength", population.signal_strength},
      {"marginals", marginals_to_json(population.marginals)},
      {"shared_mini_h", population.shared_mini_h},
      {"background_category_rate", population.background_category_rate},
  };
  j["sequence_length"] = sequence_length;
  j["slot_duration_ms"] = slot_duration_ms;
  j["input_mode"] = std::string(input_mode_name(input_mode));
  json attrs = json::array();
  for (AttributeKind kind : attributes)
    attrs.push_back(std::string(attribute_name(kind)));
  j["attributes"] = std::move(attrs);
  j["model"] = {
      {"family", std::string(family_name(model.family))},
      {"depth", model.depth},
      {"width", model.width},
      {"heads", model.heads},
      {"ffn_multiplier", model.ffn_multiplier},
      {"conv_taps", model.conv_taps},
      {"embedding_dims",
       {model.embedding_dims.miniapp, model.embedding_dims.category,
        model.embedding_dims.button}},
  };
  j["training"] = {
      {"optimizer", training.optimizer},
      {"learning_rate", training.learning_rate},
      {"epochs", training.epochs},
      {"batch_size", training.batch_size},
      {"dropout", training.dropout},
  };
  j["calibration"] = {
      {"variant", std::string(calibrator_variant_name(calibrator))}};
  j["inference"] = {{"threshold", threshold}};
  json modes = json::array();
  for (InputMode m : ablation.input_modes)
    modes.push_back(std::string(input_mode_name(m)));
  json abl_attrs = json::array();
  for (AttributeKind kind : ablation.attributes)
    abl_attrs.push_back(std::string(attribute_name(kind)));
  j["ablation"] = {
      {"thresholds", ablation.thresholds},
      {"input_modes", std::move(modes)},
      {"sequence_lengths", ablation.sequence_lengths},
      {"attributes", std::move(abl_attrs)},
      {"epochs", ablation.epochs},
      {"test_users", ablation.test_users},
      {"workers", ablation.workers},
  };
  j["personas"] = personas_to_json(personas);
  return j.dump(indent);
}

RunConfig RunConfig::from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig cfg;
  reject_unknown_keys(
      j,
      {"seed", "out_dir", "catalog", "population", "sequence_length",
       "slot_duration_ms", "input_mode", "attributes", "model", "training",
       "calibration", "inference", "ablation", "personas"},
      "");
  maybe(j, "seed", cfg.seed);
  maybe(j, "out_dir", cfg.out_dir);
  if (j.contains("catalog")) {
    const json& c = j.at("catalog");
    reject_unknown_keys(c, {"num_miniapps", "num_buttons"}, "catalog.");
    maybe(c, "num_miniapps", cfg.catalog.num_miniapps);
    maybe(c, "num_buttons", cfg.catalog.num_buttons);
  }
  if (j.contains("population")) {
    const json& p = j.at("population");
    reject_unknown_keys(p,
                        {"train_users", "validation_users", "test_users",
                         "samples_per_user", "signal_strength", "marginals",
                         "shared_mini_h", "background_category_rate"},
                        "population.");
    maybe(p, "train_users", cfg.population.train_users);
    maybe(p, "validation_users", cfg.population.validation_users);
    maybe(p, "test_users", cfg.population.test_users);
    maybe(p, "samples_per_user", cfg.population.samples_per_user);
    maybe(p, "signal_strength", cfg.population.signal_strength);
    if (p.contains("marginals"))
      cfg.population.marginals = parse_marginals(p.at("marginals"));
    maybe(p, "shared_mini_h", cfg.population.shared_mini_h);
    maybe(p, "background_category_rate",
          cfg.population.background_category_rate);
  }
  maybe(j, "sequence_length", cfg.sequence_length);
  maybe(j, "slot_duration_ms", cfg.slot_duration_ms);
  if (j.contains("input_mode"))
    cfg.input_mode = input_mode_from_name(j.at("input_mode").get<std::string>());
  if (j.contains("attributes")) {
    cfg.attributes.clear();
    for (const auto& a : j.at("attributes"))
      cfg.attributes.push_back(attribute_from_name(a.get<std::string>()));
  }
  if (j.contains("model")) {
    const json& m = j.at("model");
    reject_unknown_keys(m,
                        {"family", "depth", "width", "heads", "ffn_multiplier",
                         "conv_taps", "embedding_dims"},
                        "model.");
    if (m.contains("family"))
      cfg.model.family = family_from_name(m.at("family").get<std::string>());
    maybe(m, "depth", cfg.model.depth);
    maybe(m, "width", cfg.model.width);
    maybe(m, "heads", cfg.model.heads);
    maybe(m, "ffn_multiplier", cfg.model.ffn_multiplier);
    maybe(m, "conv_taps", cfg.model.conv_taps);
    if (m.contains("embedding_dims")) {
      auto dims = m.at("embedding_dims").get<std::vector<int>>();
      if (dims.size() != 3)
        throw ValidationError("model.embedding_dims must have 3 entries");
      cfg.model.embedding_dims = EmbeddingDims{dims[0], dims[1], dims[2]};
    }
  }
  if (j.contains("training")) {
    const json& t = j.at("training");
    reject_unknown_keys(
        t, {"optimizer", "learning_rate", "epochs", "batch_size", "dropout"},
        "training.");
    maybe(t, "optimizer", cfg.training.optimizer);
    maybe(t, "learning_rate", cfg.training.learning_rate);
    maybe(t, "epochs", cfg.training.epochs);
    maybe(t, "batch_size", cfg.training.batch_size);
    maybe(t, "dropout", cfg.training.dropout);
  }
  if (j.contains("calibration")) {
    const json& c = j.at("calibration");
    reject_unknown_keys(c, {"variant"}, "calibration.");
    if (c.contains("variant"))
      cfg.calibrator =
          calibrator_variant_from_name(c.at("variant").get<std::string>());
  }
  if (j.contains("inference")) {
    const json& i = j.at("inference");
    reject_unknown_keys(i, {"threshold"}, "inference.");
    maybe(i, "threshold", cfg.threshold);
  }
  if (j.contains("ablation")) {
    const json& a = j.at("ablation");
    reject_unknown_keys(a,
                        {"thresholds", "input_modes", "sequence_lengths",
                         "attributes", "epochs", "test_users", "workers"},
                        "ablation.");
    maybe(a, "thresholds", cfg.ablation.thresholds);
    if (a.contains("input_modes")) {
      cfg.ablation.input_modes.clear();
      for (const auto& m : a.at("input_modes"))
        cfg.ablation.input_modes.push_back(
            input_mode_from_name(m.get<std::string>()));
    }
    maybe(a, "sequence_lengths", cfg.ablation.sequence_lengths);
    if (a.contains("attributes")) {
      cfg.ablation.attributes.clear();
      for (const auto& k : a.at("attributes"))
        cfg.ablation.attributes.push_back(
            attribute_from_name(k.get<std::string>()));
    }
    maybe(a, "epochs", cfg.ablation.epochs);
    maybe(a, "test_users", cfg.ablation.test_users);
    maybe(a, "workers", cfg.ablation.workers);
  }
  if (j.contains("personas")) cfg.personas = parse_personas(j.at("personas"));
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open config file: " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return from_json_string(ss.str());
}

void RunConfig::save(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot write config file: " + path.string());
  os << to_json_string() << "\n";
}

std::string RunConfig::hash() const {
  std::string text = to_json_string(-1);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace attrinf

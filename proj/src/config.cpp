#include "oal/config.hpp"

#include <fstream>
#include <set>
#include <type_traits>

namespace oal {

using nlohmann::json;

const char* to_string(PolicyKind kind) { return kind == PolicyKind::Learned ? "learned" : "static"; }

namespace {

class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    known_.insert(key);
    const auto it = obj_.find(key);
    if (it == obj_.end()) return;
    const json& v = *it;
    bool ok = true;
    if constexpr (std::is_same_v<T, bool>) {
      ok = v.is_boolean();
    } else if constexpr (std::is_unsigned_v<T>) {
      ok = v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
    } else if constexpr (std::is_floating_point_v<T>) {
      ok = v.is_number();
    } else if constexpr (std::is_same_v<T, std::string>) {
      ok = v.is_string();
    }
    if (!ok) throw ConfigError(where(key) + ": wrong type (" + v.type_name() + ")");
    try {
      out = v.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  const json* child(const char* key) {
    known_.insert(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  std::string where(const char* key = nullptr) const {
    std::string s = path_.empty() ? "config" : path_;
    if (key) s += std::string(".") + key;
    return s;
  }

  void finish() const {
    for (const auto& [k, v] : obj_.items())
      if (!known_.contains(k)) throw ConfigError("unknown key '" + where(k.c_str()) + "'");
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> known_;
};

template <typename Fn>
void with_child(ObjectReader& parent, const char* key, Fn&& fn) {
  if (const json* c = parent.child(key)) {
    ObjectReader r(*c, parent.where(key));
    fn(r);
    r.finish();
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (batches.init == 0 || batches.train == 0 || batches.test == 0)
    throw ConfigError("every phase needs at least one batch");
  if (batch_size == 0) throw ConfigError("batch_size must be at least 1");
  if (sizes.train == 0 || sizes.test == 0) throw ConfigError("interaction sizes must be positive");
  if (env.t_max == 0) throw ConfigError("t_max must be at least 1");
  env.reward.validate();
  env.triangular.validate();
  if (env.classifier.iterations == 0) throw ConfigError("classifier.iterations must be positive");
  if (env.classifier.folds < 2) throw ConfigError("classifier.folds must be at least 2");
  if (!(env.classifier.step > 0.0)) throw ConfigError("classifier.step must be positive");
  if (env.classifier.l2 < 0.0) throw ConfigError("classifier.l2 must be non-negative");
  if (!(policy_params.alpha > 0.0)) throw ConfigError("policy_params.alpha must be positive");
  if (static_policy.n_queries > env.t_max)
    throw ConfigError("static_policy.n_queries cannot exceed t_max");
  auto in_open_unit = [](double v) { return v > 0.0 && v < 1.0; };
  if (!in_open_unit(split.test_fraction_of_frequent) || !in_open_unit(split.classifier_split))
    throw ConfigError("split ratios must lie in (0, 1)");
  (void)resolve_features(ablate);
}

ExperimentConfig config_from_json(const json& doc, ExperimentConfig c) {
  ObjectReader root(doc, "");
  root.get("master_seed", c.master_seed);
  if (const json* p = root.child("policy")) {
    if (!p->is_string()) throw ConfigError("config.policy must be a string");
    const auto s = p->get<std::string>();
    if (s == "learned")
      c.policy = PolicyKind::Learned;
    else if (s == "static")
      c.policy = PolicyKind::Static;
    else
      throw ConfigError("config.policy must be 'learned' or 'static', got '" + s + "'");
  }
  with_child(root, "phases", [&](ObjectReader& r) {
    r.get("init", c.batches.init);
    r.get("train", c.batches.train);
    r.get("test", c.batches.test);
  });
  root.get("batch_size", c.batch_size);
  with_child(root, "interaction", [&](ObjectReader& r) {
    r.get("train", c.sizes.train);
    r.get("test", c.sizes.test);
  });
  with_child(root, "split", [&](ObjectReader& r) {
    r.get("frequency_threshold", c.split.frequency_threshold);
    r.get("test_fraction_of_frequent", c.split.test_fraction_of_frequent);
    r.get("classifier_split", c.split.classifier_split);
    r.get("seed", c.split.seed);
  });
  with_child(root, "reward", [&](ObjectReader& r) {
    r.get("correct_guess", c.env.reward.correct_guess);
    r.get("incorrect_guess", c.env.reward.incorrect_guess);
    r.get("per_query", c.env.reward.per_query);
    r.get("gamma", c.env.reward.gamma);
  });
  root.get("t_max", c.env.t_max);
  if (const json* u = root.child("classifier_update")) {
    if (!u->is_string()) throw ConfigError("config.classifier_update must be a string");
    const auto s = u->get<std::string>();
    if (s == "batch-end")
      c.env.update = ClassifierUpdate::BatchEnd;
    else if (s == "immediate")
      c.env.update = ClassifierUpdate::Immediate;
    else
      throw ConfigError("config.classifier_update must be 'batch-end' or 'immediate'");
  }
  with_child(root, "classifier", [&](ObjectReader& r) {
    r.get("l2", c.env.classifier.l2);
    r.get("iterations", c.env.classifier.iterations);
    r.get("step", c.env.classifier.step);
    r.get("balance_classes", c.env.classifier.balance_classes);
    r.get("folds", c.env.classifier.folds);
  });
  with_child(root, "beam", [&](ObjectReader& r) {
    r.get("n_label", c.env.beam.n_label);
    r.get("n_example", c.env.beam.n_example);
  });
  with_child(root, "triangular", [&](ObjectReader& r) {
    r.get("w_min", c.env.triangular.w_min);
    r.get("w_max", c.env.triangular.w_max);
    r.get("c_max", c.env.triangular.c_max);
  });
  with_child(root, "policy_params", [&](ObjectReader& r) {
    r.get("alpha", c.policy_params.alpha);
    r.get("alpha_decay_updates", c.policy_params.alpha_decay_updates);
    r.get("baseline", c.policy_params.baseline);
  });
  with_child(root, "static_policy", [&](ObjectReader& r) { r.get("n_queries", c.static_policy.n_queries); });
  with_child(root, "density", [&](ObjectReader& r) {
    r.get("k", c.density.k);
    r.get("reference_sample", c.density.reference_sample);
  });
  if (const json* a = root.child("ablate")) {
    if (!a->is_array()) throw ConfigError("config.ablate must be an array of names");
    c.ablate.clear();
    for (const auto& n : *a) {
      if (!n.is_string()) throw ConfigError("config.ablate entries must be strings");
      c.ablate.push_back(n.get<std::string>());
    }
  }
  with_child(root, "corpus", [&](ObjectReader& r) {
    std::string path, format;
    r.get("path", path);
    r.get("format", format);
    if (!path.empty()) c.corpus.path = path;
    if (!format.empty()) c.corpus.format = parse_corpus_format(format);
    with_child(r, "synthetic", [&](ObjectReader& s) {
      auto& syn = c.corpus.synthetic;
      s.get("n_regions", syn.n_regions);
      s.get("dimension", syn.dimension);
      s.get("n_predicates", syn.n_predicates);
      s.get("max_frequency", syn.profile.max_frequency);
      s.get("min_frequency", syn.profile.min_frequency);
      s.get("description_min", syn.description_min);
      s.get("description_max", syn.description_max);
      s.get("seed", syn.seed);
    });
  });
  bool parallel = c.execution == kernels::Execution::Parallel;
  root.get("parallel", parallel);
  c.execution = parallel ? kernels::Execution::Parallel : kernels::Execution::Serial;
  root.finish();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(doc, std::move(base));
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["master_seed"] = c.master_seed;
  j["policy"] = to_string(c.policy);
  j["phases"] = {{"init", c.batches.init}, {"train", c.batches.train}, {"test", c.batches.test}};
  j["batch_size"] = c.batch_size;
  j["interaction"] = {{"train", c.sizes.train}, {"test", c.sizes.test}};
  j["split"] = {{"frequency_threshold", c.split.frequency_threshold},
                {"test_fraction_of_frequent", c.split.test_fraction_of_frequent},
                {"classifier_split", c.split.classifier_split},
                {"seed", c.split.seed}};
  j["reward"] = {{"correct_guess", c.env.reward.correct_guess},
                 {"incorrect_guess", c.env.reward.incorrect_guess},
                 {"per_query", c.env.reward.per_query},
                 {"gamma", c.env.reward.gamma}};
  j["t_max"] = c.env.t_max;
  j["classifier_update"] = c.env.update == ClassifierUpdate::BatchEnd ? "batch-end" : "immediate";
  j["classifier"] = {{"l2", c.env.classifier.l2},
                     {"iterations", c.env.classifier.iterations},
                     {"step", c.env.classifier.step},
                     {"balance_classes", c.env.classifier.balance_classes},
                     {"folds", c.env.classifier.folds}};
  j["beam"] = {{"n_label", c.env.beam.n_label}, {"n_example", c.env.beam.n_example}};
  j["triangular"] = {{"w_min", c.env.triangular.w_min},
                     {"w_max", c.env.triangular.w_max},
                     {"c_max", c.env.triangular.c_max}};
  j["policy_params"] = {{"alpha", c.policy_params.alpha},
                        {"alpha_decay_updates", c.policy_params.alpha_decay_updates},
                        {"baseline", c.policy_params.baseline}};
  j["static_policy"] = {{"n_queries", c.static_policy.n_queries}};
  j["density"] = {{"k", c.density.k}, {"reference_sample", c.density.reference_sample}};
  j["ablate"] = c.ablate;
  json corpus;
  if (c.corpus.path) corpus["path"] = c.corpus.path->string();
  if (c.corpus.format)
    corpus["format"] = *c.corpus.format == CorpusFormat::Tabular ? "tabular" : "annotation-json";
  const auto& s = c.corpus.synthetic;
  corpus["synthetic"] = {{"n_regions", s.n_regions},
                         {"dimension", s.dimension},
                         {"n_predicates", s.n_predicates},
                         {"max_frequency", s.profile.max_frequency},
                         {"min_frequency", s.profile.min_frequency},
                         {"description_min", s.description_min},
                         {"description_max", s.description_max},
                         {"seed", s.seed}};
  j["corpus"] = corpus;
  j["parallel"] = c.execution == kernels::Execution::Parallel;
  return j;
}

ExperimentConfig benchmark_config(std::uint64_t master_seed) {
  ExperimentConfig c;
  c.master_seed = master_seed;
  c.corpus.synthetic.n_regions = 600;
  c.corpus.synthetic.dimension = 32;
  c.corpus.synthetic.n_predicates = 24;
  c.corpus.synthetic.description_min = 1;
  c.corpus.synthetic.description_max = 3;
  c.corpus.synthetic.seed = master_seed;
  c.split.frequency_threshold = 100;
  c.policy_params.alpha = 1e-6;
  c.split.seed = master_seed;
  c.density.seed = master_seed;
  return c;
}

}  // namespace oal

#include "oal/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <unordered_map>

#include <boost/math/distributions/normal.hpp>
#include <nlohmann/json.hpp>

#include "oal/text.hpp"

namespace oal {

using nlohmann::json;

bool Region::has(const std::string& predicate) const {
  return std::binary_search(annotations.begin(), annotations.end(), predicate);
}

Corpus::Corpus(std::vector<Region> regions) : regions_(std::move(regions)) {
  if (regions_.empty()) throw CorpusError("corpus is empty");
  dimension_ = regions_.front().features.size();
  if (dimension_ == 0) throw CorpusError("region " + regions_.front().id + " has no features");
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < regions_.size(); ++i) {
    auto& r = regions_[i];
    if (r.features.size() != dimension_)
      throw CorpusError("dimension mismatch: region " + r.id + " has " +
                        std::to_string(r.features.size()) + " features, corpus has " +
                        std::to_string(dimension_));
    if (!seen.emplace(r.id, i).second) throw CorpusError("duplicate region id: " + r.id);
    std::sort(r.annotations.begin(), r.annotations.end());
    r.annotations.erase(std::unique(r.annotations.begin(), r.annotations.end()),
                        r.annotations.end());
    for (const auto& p : r.description)
      if (!r.has(p))
        throw CorpusError("region " + r.id + ": description predicate '" + p +
                          "' is not among its annotations");
  }
}

std::optional<RegionId> Corpus::find(const std::string& id) const {
  for (std::size_t i = 0; i < regions_.size(); ++i)
    if (regions_[i].id == id) return RegionId{static_cast<std::uint32_t>(i)};
  return std::nullopt;
}

CorpusFormat format_from_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".csv" || ext == ".tsv") return CorpusFormat::Tabular;
  return CorpusFormat::AnnotationJson;
}

CorpusFormat parse_corpus_format(const std::string& name) {
  if (name == "annotation-json" || name == "jsonl") return CorpusFormat::AnnotationJson;
  if (name == "tabular" || name == "csv") return CorpusFormat::Tabular;
  throw ConfigError("unknown corpus format '" + name + "' (expected annotation-json or tabular)");
}

namespace {

std::vector<std::string> normalize_annotations(const std::vector<std::string>& raw) {
  std::vector<std::string> out;
  for (const auto& a : raw)
    for (auto& p : text::normalize_annotation(a)) out.push_back(std::move(p));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Description predicates the oracle cannot answer (not among the region's
// annotations) are dropped; a description with nothing left is treated as
// absent.
void attach_description_text(Region& r, const std::string& description) {
  r.description_text = description;
  r.description.clear();
  if (description.empty()) return;
  std::vector<std::string> extracted;
  try {
    extracted = text::extract_predicates(description);
  } catch (const ParseError&) {
    return;
  }
  for (auto& p : extracted)
    if (r.has(p)) r.description.push_back(std::move(p));
}

void attach_description_list(Region& r, const std::vector<std::string>& predicates) {
  r.description.clear();
  for (const auto& raw : predicates)
    for (auto& p : text::normalize_annotation(raw))
      if (std::find(r.description.begin(), r.description.end(), p) == r.description.end())
        r.description.push_back(std::move(p));
}

std::string record_label(std::size_t line) { return "line " + std::to_string(line); }

Region parse_json_record(const std::string& line, std::size_t line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(record_label(line_no) + ": " + e.what());
  }
  try {
    Region r;
    if (!j.is_object()) throw ParseError(record_label(line_no) + ": record is not an object");
    const auto& id = j.at("id");
    r.id = id.is_string() ? id.get<std::string>() : id.dump();
    r.features = j.at("features").get<std::vector<double>>();
    r.annotations = normalize_annotations(j.at("annotations").get<std::vector<std::string>>());
    if (auto it = j.find("description"); it != j.end() && !it->is_null()) {
      if (it->is_array())
        attach_description_list(r, it->get<std::vector<std::string>>());
      else
        attach_description_text(r, it->get<std::string>());
    }
    return r;
  } catch (const json::exception& e) {
    throw ParseError(record_label(line_no) + ": " + e.what());
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(s);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  std::size_t start = 0;
  while (start < s.size() && s[start] == ' ') ++start;
  return s.substr(start);
}

std::vector<Region> read_tabular(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("line 1: missing header row");
  const auto header = split(trim(line), ',');
  if (header.empty() || header[0] != "id") throw ParseError("line 1: header must start with 'id'");
  std::size_t d = 0;
  while (1 + d < header.size() && header[1 + d] == "f" + std::to_string(d)) ++d;
  if (d == 0) throw ParseError("line 1: no feature columns f0..f{d-1}");
  if (1 + d >= header.size() || header[1 + d] != "annotations")
    throw ParseError("line 1: expected 'annotations' column after feature columns");
  const bool has_description = header.size() > d + 2 && header[d + 2] == "description";
  const std::size_t columns = d + 2 + (has_description ? 1 : 0);

  std::vector<Region> regions;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    auto fields = split(line, ',');
    // A short row is a dimension problem when only feature columns are missing.
    if (fields.size() != columns) {
      if (fields.size() >= 2 && fields.size() < columns)
        throw CorpusError(record_label(line_no) + ": dimension mismatch, expected " +
                          std::to_string(columns) + " columns, got " +
                          std::to_string(fields.size()));
      throw ParseError(record_label(line_no) + ": expected " + std::to_string(columns) +
                       " columns, got " + std::to_string(fields.size()));
    }
    Region r;
    r.id = fields[0];
    r.features.reserve(d);
    for (std::size_t i = 0; i < d; ++i) {
      try {
        std::size_t used = 0;
        r.features.push_back(std::stod(fields[1 + i], &used));
        if (used != trim(fields[1 + i]).size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ParseError(record_label(line_no) + ": bad feature value '" + fields[1 + i] + "'");
      }
    }
    std::vector<std::string> raw;
    for (auto& a : split(fields[1 + d], '|'))
      if (!a.empty()) raw.push_back(a);
    r.annotations = normalize_annotations(raw);
    if (has_description) attach_description_text(r, fields[d + 2]);
    regions.push_back(std::move(r));
  }
  return regions;
}

}  // namespace

std::vector<Region> read_regions(std::istream& in, CorpusFormat format) {
  std::vector<Region> regions;
  if (format == CorpusFormat::Tabular) {
    regions = read_tabular(in);
  } else {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      regions.push_back(parse_json_record(line, line_no));
    }
  }
  if (regions.empty()) return regions;
  const std::size_t d = regions.front().features.size();
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < regions.size(); ++i) {
    if (regions[i].features.size() != d)
      throw CorpusError("record " + std::to_string(i + 1) + " (" + regions[i].id +
                        "): dimension mismatch, " + std::to_string(regions[i].features.size()) +
                        " features, expected " + std::to_string(d));
    if (!seen.emplace(regions[i].id, i).second)
      throw CorpusError("duplicate region id: " + regions[i].id);
  }
  return regions;
}

std::vector<Region> load_regions(const std::filesystem::path& path, CorpusFormat format) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus file " + path.string());
  return read_regions(in, format);
}

void write_regions(std::ostream& out, std::span<const Region> regions, CorpusFormat format) {
  if (format == CorpusFormat::AnnotationJson) {
    for (const auto& r : regions) {
      json j;
      j["id"] = r.id;
      j["features"] = r.features;
      j["annotations"] = r.annotations;
      if (!r.description_text.empty())
        j["description"] = r.description_text;
      else if (!r.description.empty())
        j["description"] = r.description;
      out << j.dump() << '\n';
    }
    return;
  }
  const std::size_t d = regions.empty() ? 0 : regions.front().features.size();
  out << "id";
  for (std::size_t i = 0; i < d; ++i) out << ",f" << i;
  out << ",annotations,description\n";
  for (const auto& r : regions) {
    out << r.id;
    for (double f : r.features) out << ',' << std::setprecision(17) << f;
    out << ',';
    for (std::size_t i = 0; i < r.annotations.size(); ++i) out << (i ? "|" : "") << r.annotations[i];
    out << ',';
    if (!r.description_text.empty()) {
      out << r.description_text;
    } else {
      for (std::size_t i = 0; i < r.description.size(); ++i) out << (i ? " " : "") << r.description[i];
    }
    out << '\n';
  }
}

bool HalfSpace::contains(std::span<const double> x) const {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += normal[i] * x[i];
  return s >= offset;
}

namespace {

std::string padded(const std::string& prefix, std::size_t i, std::size_t n) {
  const auto width = std::to_string(n > 0 ? n - 1 : 0).size();
  std::ostringstream s;
  s << prefix << std::setw(static_cast<int>(width)) << std::setfill('0') << i;
  return s.str();
}

}  // namespace

SyntheticCorpus generate_synthetic(const SyntheticConfig& config) {
  if (config.n_regions < 12)
    throw CorpusError("n_regions must be at least 12 (one interaction), got " +
                      std::to_string(config.n_regions));
  if (config.n_predicates < 1) throw CorpusError("n_predicates must be at least 1");
  if (config.dimension < 1) throw CorpusError("dimension must be at least 1");
  if (config.description_min < 1 || config.description_max < config.description_min)
    throw CorpusError("description length range must satisfy 1 <= min <= max");
  const auto& prof = config.profile;
  if (!(prof.max_frequency > 0 && prof.max_frequency < 1 && prof.min_frequency > 0 &&
        prof.min_frequency <= prof.max_frequency))
    throw CorpusError("frequency profile must satisfy 0 < min <= max < 1");

  SeedStream rng(derive_seed(config.seed, {0x5e, 1}));
  SyntheticCorpus out;
  const boost::math::normal_distribution<double> standard;
  for (std::size_t p = 0; p < config.n_predicates; ++p) {
    HalfSpace h;
    h.normal.resize(config.dimension);
    double norm = 0.0;
    do {
      norm = 0.0;
      for (auto& v : h.normal) {
        v = rng.normal();
        norm += v * v;
      }
      norm = std::sqrt(norm);
    } while (norm == 0.0);
    for (auto& v : h.normal) v /= norm;
    const double t = config.n_predicates == 1
                         ? 0.0
                         : static_cast<double>(p) / static_cast<double>(config.n_predicates - 1);
    const double frequency =
        prof.max_frequency * std::pow(prof.min_frequency / prof.max_frequency, t);
    // dot(normal, x) ~ N(0, 1) for standard normal x.
    h.offset = boost::math::quantile(standard, 1.0 - frequency);
    out.half_spaces.push_back(std::move(h));
    out.predicate_names.push_back(padded("p", p, config.n_predicates));
  }

  for (std::size_t i = 0; i < config.n_regions; ++i) {
    Region r;
    r.id = padded("r", i, config.n_regions);
    std::size_t attempts = 0;
    while (true) {
      if (++attempts > config.max_attempts_per_region)
        throw CorpusError("synthetic generation: no region with a non-empty annotation set after " +
                          std::to_string(config.max_attempts_per_region) + " draws");
      r.features.assign(config.dimension, 0.0);
      for (auto& v : r.features) v = rng.normal();
      r.annotations.clear();
      for (std::size_t p = 0; p < config.n_predicates; ++p)
        if (out.half_spaces[p].contains(r.features)) r.annotations.push_back(out.predicate_names[p]);
      if (!r.annotations.empty()) break;
    }
    // Names are zero-padded so index order is lexicographic order.
    const std::size_t hi = std::min(config.description_max, r.annotations.size());
    const std::size_t lo = std::min(config.description_min, hi);
    const std::size_t k = lo + rng.index(hi - lo + 1);
    std::vector<std::string> pool = r.annotations;
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t pick = j + rng.index(pool.size() - j);
      std::swap(pool[j], pool[pick]);
      r.description.push_back(pool[j]);
    }
    out.regions.push_back(std::move(r));
  }
  return out;
}

const char* to_string(PolicySide side) {
  return side == PolicySide::Train ? "policy-train" : "policy-test";
}

std::span<const RegionId> CorpusSplit::classifier_train(PolicySide side) const {
  return side == PolicySide::Train ? policy_train_classifier_train : policy_test_classifier_train;
}

std::span<const RegionId> CorpusSplit::classifier_test(PolicySide side) const {
  return side == PolicySide::Train ? policy_train_classifier_test : policy_test_classifier_test;
}

namespace {

template <typename T>
void shuffle(std::vector<T>& items, SeedStream& rng) {
  for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[rng.index(i)]);
}

void split_side(std::vector<RegionId> side, double ratio, SeedStream& rng,
                std::vector<RegionId>& train, std::vector<RegionId>& test) {
  shuffle(side, rng);
  const auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(side.size())));
  train.assign(side.begin(), side.begin() + static_cast<std::ptrdiff_t>(n_train));
  test.assign(side.begin() + static_cast<std::ptrdiff_t>(n_train), side.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
}

}  // namespace

CorpusSplit make_splits(const Corpus& corpus, const SplitConfig& config) {
  if (corpus.size() == 0) throw CorpusError("cannot split an empty corpus");
  auto in_open_unit = [](double v) { return v > 0.0 && v < 1.0; };
  if (!in_open_unit(config.test_fraction_of_frequent) || !in_open_unit(config.classifier_split))
    throw ConfigError("split ratios must lie in (0, 1)");

  std::map<std::string, std::size_t> counts;
  for (const auto& r : corpus.regions())
    for (const auto& p : r.annotations) ++counts[p];
  std::vector<std::string> frequent;
  for (const auto& [p, c] : counts)
    if (c >= config.frequency_threshold) frequent.push_back(p);
  if (frequent.empty())
    throw CorpusError("no predicate appears in at least " +
                      std::to_string(config.frequency_threshold) +
                      " regions; lower the frequency threshold");

  SeedStream rng(derive_seed(config.seed, {0x5a, 2}));
  shuffle(frequent, rng);
  auto n_held = static_cast<std::size_t>(
      std::llround(config.test_fraction_of_frequent * static_cast<double>(frequent.size())));
  n_held = std::clamp<std::size_t>(n_held, 1, frequent.size());

  CorpusSplit split;
  split.held_out_predicates.insert(frequent.begin(), frequent.begin() + static_cast<std::ptrdiff_t>(n_held));

  std::vector<RegionId> train_side, test_side;
  for (std::uint32_t i = 0; i < corpus.size(); ++i) {
    const auto& r = corpus[RegionId{i}];
    const bool novel = std::any_of(r.annotations.begin(), r.annotations.end(), [&](const auto& p) {
      return split.held_out_predicates.contains(p);
    });
    (novel ? test_side : train_side).push_back(RegionId{i});
  }
  split_side(std::move(train_side), config.classifier_split, rng,
             split.policy_train_classifier_train, split.policy_train_classifier_test);
  split_side(std::move(test_side), config.classifier_split, rng,
             split.policy_test_classifier_train, split.policy_test_classifier_test);
  return split;
}

Interaction sample_interaction(const Corpus& corpus, const CorpusSplit& split, PolicySide side,
                               const InteractionSizes& sizes, SeedStream& stream) {
  const auto train_pool = split.classifier_train(side);
  const auto test_pool = split.classifier_test(side);
  if (train_pool.size() < sizes.train || test_pool.size() < sizes.test || sizes.test == 0)
    throw CorpusError(std::string("sampling: ") + to_string(side) + " subsets have " +
                      std::to_string(train_pool.size()) + "/" + std::to_string(test_pool.size()) +
                      " regions, need " + std::to_string(sizes.train) + "/" +
                      std::to_string(sizes.test));
  const bool any_target = std::any_of(test_pool.begin(), test_pool.end(), [&](RegionId r) {
    return !corpus[r].description.empty();
  });
  if (!any_target)
    throw CorpusError(std::string("sampling: no ") + to_string(side) +
                      " classifier-test region has a description");

  auto draw = [&stream](std::span<const RegionId> pool, std::size_t k) {
    // Partial Fisher-Yates over a copy of the pool.
    std::vector<RegionId> items(pool.begin(), pool.end());
    for (std::size_t j = 0; j < k; ++j) std::swap(items[j], items[j + stream.index(items.size() - j)]);
    items.resize(k);
    return items;
  };

  Interaction interaction;
  interaction.active_train = draw(train_pool, sizes.train);
  constexpr int kMaxRedraws = 10000;
  for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
    interaction.active_test = draw(test_pool, sizes.test);
    std::vector<RegionId> candidates;
    for (auto r : interaction.active_test)
      if (!corpus[r].description.empty()) candidates.push_back(r);
    if (candidates.empty()) continue;
    interaction.target = candidates[stream.index(candidates.size())];
    interaction.description = corpus[interaction.target].description;
    return interaction;
  }
  throw CorpusError("sampling: could not draw an active test set containing a described region");
}

}  // namespace oal

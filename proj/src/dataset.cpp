#include "mlt/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "mlt/rng.hpp"
#include "mlt/tensor_io.hpp"

namespace mlt {

namespace {

using json = nlohmann::ordered_json;

void validate_labels(const std::vector<int>& labels, int num_classes, const std::string& where) {
  if (labels.empty()) throw std::invalid_argument(where + ": empty label set");
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] < 0 || labels[k] >= num_classes) {
      throw std::invalid_argument(where + ": label index " + std::to_string(labels[k]) +
                                  " out of range [0, " + std::to_string(num_classes) + ")");
    }
    if (k > 0 && labels[k] <= labels[k - 1]) {
      throw std::invalid_argument(where + ": labels must be sorted and unique");
    }
  }
}

std::vector<int> normalize_labels(std::vector<int> labels) {
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  return labels;
}

}  // namespace

LabelVocabulary LabelVocabulary::from_names(std::vector<std::string> names) {
  if (names.size() < 2) {
    throw std::invalid_argument("vocabulary needs at least 2 classes, got " +
                                std::to_string(names.size()));
  }
  LabelVocabulary vocab;
  vocab.names_ = std::move(names);
  for (std::size_t i = 0; i < vocab.names_.size(); ++i) {
    auto [it, inserted] = vocab.index_.emplace(vocab.names_[i], static_cast<int>(i));
    if (!inserted) {
      throw std::invalid_argument("duplicate class name: \"" + vocab.names_[i] + "\"");
    }
  }
  return vocab;
}

int LabelVocabulary::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::invalid_argument("unknown class name: \"" + name + "\"");
  return it->second;
}

LabelVocabulary build_vocabulary(const std::vector<std::string>& names) {
  return LabelVocabulary::from_names(names);
}

Dataset::Dataset(LabelVocabulary vocabulary, std::vector<MultiLabelExample> examples)
    : vocabulary_(std::move(vocabulary)), examples_(std::move(examples)) {
  class_counts_.assign(static_cast<std::size_t>(vocabulary_.size()), 0);
  feature_dim_ = examples_.empty() ? 0 : static_cast<int>(examples_.front().features.size());
  for (std::size_t e = 0; e < examples_.size(); ++e) {
    const auto& ex = examples_[e];
    const std::string where = "example \"" + ex.id + "\"";
    validate_labels(ex.labels, vocabulary_.size(), where);
    if (static_cast<int>(ex.features.size()) != feature_dim_) {
      throw std::invalid_argument(where + ": feature length " + std::to_string(ex.features.size()) +
                                  " differs from " + std::to_string(feature_dim_));
    }
    if (!ex.features.allFinite()) {
      throw std::invalid_argument(where + ": features contain NaN or Inf");
    }
    for (int label : ex.labels) class_counts_[static_cast<std::size_t>(label)]++;
  }
}

WeightScheme weight_scheme_from_string(const std::string& name) {
  if (name == "uniform") return WeightScheme::kUniform;
  if (name == "invfreq" || name == "inverse_frequency") return WeightScheme::kInverseFrequency;
  throw std::invalid_argument("unknown weight scheme: \"" + name + "\"");
}

std::string to_string(WeightScheme scheme) {
  return scheme == WeightScheme::kUniform ? "uniform" : "invfreq";
}

ClassWeights compute_class_weights(const Dataset& dataset, WeightScheme scheme) {
  const int num_classes = dataset.num_classes();
  if (scheme == WeightScheme::kUniform) return ClassWeights::uniform(num_classes);

  const auto& counts = dataset.class_counts();
  std::string empty;
  for (int i = 0; i < num_classes; ++i) {
    if (counts[static_cast<std::size_t>(i)] == 0) {
      if (!empty.empty()) empty += ", ";
      empty += dataset.vocabulary().name(i);
    }
  }
  if (!empty.empty()) {
    throw std::invalid_argument("inverse_frequency weights need every class populated; empty: " +
                                empty);
  }
  const double total = static_cast<double>(
      std::accumulate(counts.begin(), counts.end(), static_cast<std::int64_t>(0)));
  Eigen::VectorXd w(num_classes);
  for (int i = 0; i < num_classes; ++i) {
    const double raw = total / (static_cast<double>(num_classes) *
                                static_cast<double>(counts[static_cast<std::size_t>(i)]));
    w[i] = std::clamp(raw, 0.1, 10.0);
  }
  return ClassWeights{std::move(w)};
}

std::vector<double> zipf_probabilities(int num_classes, double exponent) {
  std::vector<double> p(static_cast<std::size_t>(num_classes));
  double norm = 0.0;
  for (int i = 0; i < num_classes; ++i) {
    p[static_cast<std::size_t>(i)] = std::pow(static_cast<double>(i + 1), -exponent);
    norm += p[static_cast<std::size_t>(i)];
  }
  for (auto& v : p) v /= norm;
  return p;
}

namespace {

// Largest-remainder allocation of `total` slots to the Zipf proportions.
// Classes rounded down to zero get one slot back from the largest class so
// every class stays usable for inverse-frequency weighting.
std::vector<int> zipf_quota(const std::vector<double>& probs, int total) {
  const int num_classes = static_cast<int>(probs.size());
  std::vector<int> quota(probs.size());
  std::vector<std::pair<double, int>> remainder(probs.size());
  int assigned = 0;
  for (int i = 0; i < num_classes; ++i) {
    const double ideal = probs[static_cast<std::size_t>(i)] * total;
    quota[static_cast<std::size_t>(i)] = static_cast<int>(std::floor(ideal));
    assigned += quota[static_cast<std::size_t>(i)];
    remainder[static_cast<std::size_t>(i)] = {ideal - std::floor(ideal), i};
  }
  std::sort(remainder.begin(), remainder.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (int k = 0; k < total - assigned; ++k) {
    quota[static_cast<std::size_t>(remainder[static_cast<std::size_t>(k)].second)]++;
  }
  for (int i = 0; i < num_classes; ++i) {
    while (quota[static_cast<std::size_t>(i)] == 0) {
      const auto it = std::max_element(quota.begin(), quota.end());
      (*it)--;
      quota[static_cast<std::size_t>(i)]++;
    }
  }
  return quota;
}

// Draws one class from the Zipf distribution restricted to classes not in
// `taken` (renormalized by CDF walk).
int draw_restricted(const std::vector<double>& probs, const std::vector<bool>& taken, Rng& rng) {
  double mass = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i)
    if (!taken[i]) mass += probs[i];
  const double u = rng.uniform() * mass;
  double acc = 0.0;
  int last = -1;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (taken[i]) continue;
    acc += probs[i];
    last = static_cast<int>(i);
    if (u < acc) return last;
  }
  return last;  // numeric edge when u == mass
}

}  // namespace

Dataset generate_synthetic_dataset(const SyntheticConfig& config, std::uint64_t seed) {
  if (config.num_classes < 2) throw std::invalid_argument("num_classes must be >= 2");
  if (config.feature_dim < config.num_classes) {
    throw std::invalid_argument("feature_dim must be >= num_classes");
  }
  if (config.num_examples < config.num_classes) {
    throw std::invalid_argument("num_examples must be >= num_classes");
  }
  if (config.co_label_prob < 0.0 || config.co_label_prob > 1.0) {
    throw std::invalid_argument("co_label_prob must be in [0, 1]");
  }
  if (config.noise_std < 0.0) throw std::invalid_argument("noise_std must be >= 0");
  if (!(config.zipf_exponent >= 0.0)) throw std::invalid_argument("zipf_exponent must be >= 0");

  const int C = config.num_classes;
  const int F = config.feature_dim;
  const int N = config.num_examples;

  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(C));
  for (int i = 0; i < C; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "action_%03d", i);
    names.emplace_back(buf);
  }

  Rng rng(seed);
  const auto probs = zipf_probabilities(C, config.zipf_exponent);
  const auto quota = zipf_quota(probs, N);

  std::vector<int> primaries;
  primaries.reserve(static_cast<std::size_t>(N));
  for (int i = 0; i < C; ++i) {
    primaries.insert(primaries.end(), static_cast<std::size_t>(quota[static_cast<std::size_t>(i)]),
                     i);
  }
  rng.shuffle(primaries);

  std::vector<MultiLabelExample> examples;
  examples.reserve(static_cast<std::size_t>(N));
  for (int e = 0; e < N; ++e) {
    std::vector<bool> taken(static_cast<std::size_t>(C), false);
    std::vector<int> labels{primaries[static_cast<std::size_t>(e)]};
    taken[static_cast<std::size_t>(labels[0])] = true;
    // Extra labels: geometric stopping, capped so at least one class stays
    // negative. Each extra follows the same Zipf proportions, which keeps
    // the overall class frequencies long-tailed.
    while (static_cast<int>(labels.size()) < C - 1 && rng.uniform() < config.co_label_prob) {
      const int extra = draw_restricted(probs, taken, rng);
      taken[static_cast<std::size_t>(extra)] = true;
      labels.push_back(extra);
    }

    Eigen::VectorXd features = Eigen::VectorXd::Zero(F);
    for (int label : labels) features[label] += 1.0;
    for (int f = 0; f < F; ++f) features[f] += config.noise_std * rng.normal();

    char buf[32];
    std::snprintf(buf, sizeof(buf), "ex%06d", e);
    examples.push_back({buf, std::move(features), normalize_labels(std::move(labels))});
  }

  return Dataset(LabelVocabulary::from_names(std::move(names)), std::move(examples));
}

namespace {

Eigen::VectorXd features_from_json(const json& line, const std::filesystem::path& base_dir,
                                   const std::string& where) {
  if (line.contains("features")) {
    const auto& arr = line.at("features");
    if (!arr.is_array()) throw std::invalid_argument(where + ": \"features\" must be an array");
    Eigen::VectorXd v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
      if (!arr[i].is_number()) throw std::invalid_argument(where + ": non-numeric feature");
      v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    }
    return v;
  }
  if (line.contains("features_file")) {
    const auto path = base_dir / line.at("features_file").get<std::string>();
    const int row = line.value("row", 0);
    const Tensor t = read_tensor(path.string());
    if (t.dims.size() != 2) {
      throw std::invalid_argument(where + ": features_file must hold a 2-D tensor");
    }
    if (row < 0 || static_cast<std::uint32_t>(row) >= t.dims[0]) {
      throw std::invalid_argument(where + ": row " + std::to_string(row) + " out of range");
    }
    const std::size_t cols = t.dims[1];
    Eigen::VectorXd v(static_cast<Eigen::Index>(cols));
    for (std::size_t c = 0; c < cols; ++c) {
      v[static_cast<Eigen::Index>(c)] = t.data[static_cast<std::size_t>(row) * cols + c];
    }
    return v;
  }
  throw std::invalid_argument(where + ": needs \"features\" or \"features_file\"");
}

}  // namespace

Dataset load_dataset(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("cannot open manifest: " + manifest_path);
  const auto base_dir = std::filesystem::path(manifest_path).parent_path();

  std::string text;
  int line_no = 0;

  if (!std::getline(in, text)) throw std::invalid_argument("manifest is empty: " + manifest_path);
  line_no = 1;

  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument("manifest line 1: invalid JSON (" + std::string(e.what()) + ")");
  }
  if (!header.contains("classes") || !header.at("classes").is_array()) {
    throw std::invalid_argument("manifest line 1: expected header {\"classes\": [...]}");
  }
  auto vocab = LabelVocabulary::from_names(header.at("classes").get<std::vector<std::string>>());
  const int num_classes = vocab.size();

  std::vector<MultiLabelExample> examples;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.empty()) continue;
    const std::string where = "manifest line " + std::to_string(line_no);
    json line;
    try {
      line = json::parse(text);
    } catch (const json::exception& e) {
      throw std::invalid_argument(where + ": invalid JSON (" + std::string(e.what()) + ")");
    }
    MultiLabelExample ex;
    ex.id = line.value("id", std::string("line") + std::to_string(line_no));
    ex.features = features_from_json(line, base_dir, where);
    if (!line.contains("labels") || !line.at("labels").is_array()) {
      throw std::invalid_argument(where + ": missing \"labels\" array");
    }
    ex.labels = line.at("labels").get<std::vector<int>>();
    if (ex.labels.empty()) throw std::invalid_argument(where + ": empty label list");
    for (int label : ex.labels) {
      if (label < 0 || label >= num_classes) {
        throw std::invalid_argument(where + ": label index " + std::to_string(label) +
                                    " out of range [0, " + std::to_string(num_classes) + ")");
      }
    }
    ex.labels = normalize_labels(std::move(ex.labels));
    examples.push_back(std::move(ex));
  }
  return Dataset(std::move(vocab), std::move(examples));
}

void save_dataset(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: byte-identical across platforms
  if (!out) throw std::runtime_error("cannot open for writing: " + path);

  json header;
  header["classes"] = dataset.vocabulary().names();
  out << header.dump() << '\n';

  for (const auto& ex : dataset.examples()) {
    json line;
    line["id"] = ex.id;
    line["features"] = std::vector<double>(ex.features.data(), ex.features.data() + ex.features.size());
    line["labels"] = ex.labels;
    out << line.dump() << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

bool datasets_equal(const Dataset& a, const Dataset& b) {
  if (!(a.vocabulary() == b.vocabulary())) return false;
  if (a.num_examples() != b.num_examples()) return false;
  for (int e = 0; e < a.num_examples(); ++e) {
    const auto& ea = a.examples()[static_cast<std::size_t>(e)];
    const auto& eb = b.examples()[static_cast<std::size_t>(e)];
    if (ea.id != eb.id || ea.labels != eb.labels) return false;
    if (ea.features.size() != eb.features.size()) return false;
    for (Eigen::Index i = 0; i < ea.features.size(); ++i) {
      if (ea.features[i] != eb.features[i]) return false;
    }
  }
  return true;
}

}  // namespace mlt

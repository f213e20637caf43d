#ifndef MLT_DATASET_HPP_
#define MLT_DATASET_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace mlt {

// Ordered set of class names. Index assignment follows construction order
// and is stable for the lifetime of the vocabulary.
class LabelVocabulary {
 public:
  static LabelVocabulary from_names(std::vector<std::string> names);

  int size() const { return static_cast<int>(names_.size()); }
  const std::string& name(int index) const { return names_.at(static_cast<std::size_t>(index)); }
  const std::vector<std::string>& names() const { return names_; }
  bool contains(const std::string& name) const { return index_.count(name) > 0; }
  int index_of(const std::string& name) const;

  bool operator==(const LabelVocabulary& other) const { return names_ == other.names_; }

 private:
  LabelVocabulary() = default;
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
};

LabelVocabulary build_vocabulary(const std::vector<std::string>& names);

// One data point: a feature vector and its positive label set.
// Labels are kept as a sorted, duplicate-free index list.
struct MultiLabelExample {
  std::string id;
  Eigen::VectorXd features;
  std::vector<int> labels;
};

class Dataset {
 public:
  Dataset(LabelVocabulary vocabulary, std::vector<MultiLabelExample> examples);

  const LabelVocabulary& vocabulary() const { return vocabulary_; }
  const std::vector<MultiLabelExample>& examples() const { return examples_; }
  // Positive-example count per class, recomputed at construction.
  const std::vector<std::int64_t>& class_counts() const { return class_counts_; }

  int num_classes() const { return vocabulary_.size(); }
  int num_examples() const { return static_cast<int>(examples_.size()); }
  int feature_dim() const { return feature_dim_; }

 private:
  LabelVocabulary vocabulary_;
  std::vector<MultiLabelExample> examples_;
  std::vector<std::int64_t> class_counts_;
  int feature_dim_ = 0;
};

// Per-class balancing terms. All entries finite and > 0.
struct ClassWeights {
  Eigen::VectorXd weights;

  static ClassWeights uniform(int num_classes) {
    return ClassWeights{Eigen::VectorXd::Ones(num_classes)};
  }
  int size() const { return static_cast<int>(weights.size()); }
  double operator[](int i) const { return weights[i]; }
};

enum class WeightScheme { kUniform, kInverseFrequency };

WeightScheme weight_scheme_from_string(const std::string& name);
std::string to_string(WeightScheme scheme);

// uniform: all ones. inverse_frequency: w_i = N_lab / (C * n_i) clamped to
// [0.1, 10.0] with N_lab the total label count; rejects empty classes.
ClassWeights compute_class_weights(const Dataset& dataset, WeightScheme scheme);

struct SyntheticConfig {
  int num_classes = 10;      // C
  int feature_dim = 16;      // F, must be >= C
  int num_examples = 200;    // N
  double zipf_exponent = 1.0;
  double co_label_prob = 0.0;
  double noise_std = 0.0;
};

// Long-tail synthetic data. Class i owns the basis direction e_i in feature
// space; an example's features are the sum of its label directions plus
// Gaussian noise. Primary labels are allocated by exact Zipf quota (largest
// remainder), extra labels are drawn from the same Zipf distribution, so
// class frequencies track the Zipf proportions closely even at small N.
// Pure function of (config, seed).
Dataset generate_synthetic_dataset(const SyntheticConfig& config, std::uint64_t seed);

// Zipf probabilities p_i proportional to (i+1)^-exponent, i = 0..C-1.
std::vector<double> zipf_probabilities(int num_classes, double exponent);

// JSON-lines manifest I/O. First line {"classes": [...]}, one example per
// following line. save always inlines features; load also accepts
// {"features_file": path, "row": k} referring to a 2-D tensor file.
Dataset load_dataset(const std::string& manifest_path);
void save_dataset(const Dataset& dataset, const std::string& path);

bool datasets_equal(const Dataset& a, const Dataset& b);

}  // namespace mlt

#endif  // MLT_DATASET_HPP_

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "hiernav/geometry.hpp"
#include "hiernav/scenario.hpp"

namespace hiernav {

enum class Channel { Visual, Semantic };

/// Unit vector in R^n tagged with its encoder channel. An all-zero vector is
/// the "outside every room" sentinel and is exempt from the unit-norm rule.
struct Embedding {
  std::vector<double> values;
  Channel channel = Channel::Visual;

  std::size_t dim() const { return values.size(); }
  bool is_zero() const;
  static Embedding zero(std::size_t n, Channel ch) { return {std::vector<double>(n, 0.0), ch}; }
};

/// Cosine similarity; 0 when either side is the zero sentinel.
double cosine(const Embedding& a, const Embedding& b);

struct EmbeddingConfig {
  int dim = 64;
  std::uint64_t seed = 42;
  /// Expected norm of the image-goal perturbation before renormalizing.
  double image_noise_sigma = 0.1;
};

/// Deterministic stand-in for a text/image encoder: n seeded standard normals,
/// normalized. Identical inputs give identical vectors.
Embedding label_embedding(std::string_view label, Channel channel, int n, std::uint64_t global_seed);

/// Pair returned by a field query: (visual, semantic).
struct FieldSample {
  Embedding visual;
  Embedding semantic;
  bool is_sentinel() const { return visual.is_zero() && semantic.is_zero(); }
};

struct QueryEmbedding {
  Embedding c;  // visual channel
  Embedding s;  // semantic channel
};

struct LabeledExtent {
  std::string id;
  std::string label;
  Rect rect;
  std::string room_label;  // objects only
};

/// Synthetic field over labeled room and object extents. Objects map to
/// (object label, room label); bare room space to (room label, room label).
class SemanticField {
 public:
  SemanticField(std::vector<LabeledExtent> rooms, std::vector<LabeledExtent> objects, EmbeddingConfig config = {});
  static SemanticField from_scenario(const Scenario& s, EmbeddingConfig config = {});

  FieldSample query(Vec2 p, double z = 0.0) const;
  const EmbeddingConfig& config() const { return config_; }
  const std::vector<LabeledExtent>& rooms() const { return rooms_; }
  const std::vector<LabeledExtent>& objects() const { return objects_; }
  const LabeledExtent* find_object(std::string_view id) const;

  /// Sorted, de-duplicated labels known to the field.
  std::vector<std::string> labels() const;
  /// Debug dump {"n","seed","labels"}; embeddings are recomputed, never stored.
  nlohmann::json dump() const;

 private:
  struct Cached {
    Embedding visual;
    Embedding semantic;
  };
  std::vector<LabeledExtent> rooms_;
  std::vector<LabeledExtent> objects_;
  std::vector<Cached> room_cache_;
  std::vector<Cached> object_cache_;
  EmbeddingConfig config_;
};

using EncodedInstruction = std::variant<QueryEmbedding, Vec2>;

/// Text -> (E_V(target), E_S(region or target)); Image -> the named object's
/// embeddings with seeded Gaussian noise, renormalized; Position -> the point.
EncodedInstruction encode_instruction(const Instruction& i, const SemanticField& field);

/// w_v * cos(c, f_v) + (1 - w_v) * cos(s, f_s); 0 for the sentinel.
double combined_similarity(const QueryEmbedding& q, const FieldSample& f, double w_v = 0.5);

}  // namespace hiernav

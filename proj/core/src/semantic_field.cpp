#include "hiernav/semantic_field.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "hiernav/errors.hpp"
#include "hiernav/rng.hpp"

namespace hiernav {

namespace {

const char* channel_tag(Channel ch) { return ch == Channel::Visual ? "visual" : "semantic"; }

void normalize(std::vector<double>& v) {
  double n2 = 0.0;
  for (const double x : v) n2 += x * x;
  const double n = std::sqrt(n2);
  for (double& x : v) x /= n;
}

}  // namespace

bool Embedding::is_zero() const {
  return std::all_of(values.begin(), values.end(), [](double x) { return x == 0.0; });
}

double cosine(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim()) throw Error(ErrorKind::InvalidArgument, "embedding dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

Embedding label_embedding(std::string_view label, Channel channel, int n, std::uint64_t global_seed) {
  if (label.empty()) throw Error(ErrorKind::InvalidArgument, "empty label");
  if (n <= 0) throw Error(ErrorKind::InvalidArgument, "embedding dimension must be positive");
  CounterRng rng(hash_combine(hash_combine(global_seed, channel_tag(channel)), label));
  Embedding e{std::vector<double>(static_cast<std::size_t>(n)), channel};
  for (double& x : e.values) x = rng.normal();
  normalize(e.values);
  return e;
}

SemanticField::SemanticField(std::vector<LabeledExtent> rooms, std::vector<LabeledExtent> objects, EmbeddingConfig config)
    : rooms_(std::move(rooms)), objects_(std::move(objects)), config_(config) {
  for (const auto& r : rooms_)
    room_cache_.push_back({label_embedding(r.label, Channel::Visual, config_.dim, config_.seed),
                           label_embedding(r.label, Channel::Semantic, config_.dim, config_.seed)});
  for (const auto& o : objects_)
    object_cache_.push_back({label_embedding(o.label, Channel::Visual, config_.dim, config_.seed),
                             label_embedding(o.room_label, Channel::Semantic, config_.dim, config_.seed)});
}

SemanticField SemanticField::from_scenario(const Scenario& s, EmbeddingConfig config) {
  std::vector<LabeledExtent> rooms;
  std::vector<LabeledExtent> objects;
  for (const auto& r : s.rooms) rooms.push_back({r.id, r.label, r.rect, r.label});
  for (const auto& o : s.objects) {
    const Room* room = s.find_room(o.room);
    objects.push_back({o.id, o.label, o.rect, room != nullptr ? room->label : o.room});
  }
  return SemanticField(std::move(rooms), std::move(objects), config);
}

FieldSample SemanticField::query(Vec2 p, double /*z*/) const {
  for (std::size_t k = 0; k < objects_.size(); ++k)
    if (objects_[k].rect.contains(p, 0.0)) return {object_cache_[k].visual, object_cache_[k].semantic};
  // Strict interior first so shared walls resolve to a single room.
  for (std::size_t k = 0; k < rooms_.size(); ++k)
    if (rooms_[k].rect.strictly_contains(p)) return {room_cache_[k].visual, room_cache_[k].semantic};
  for (std::size_t k = 0; k < rooms_.size(); ++k)
    if (rooms_[k].rect.contains(p, 0.0)) return {room_cache_[k].visual, room_cache_[k].semantic};
  const auto n = static_cast<std::size_t>(config_.dim);
  return {Embedding::zero(n, Channel::Visual), Embedding::zero(n, Channel::Semantic)};
}

const LabeledExtent* SemanticField::find_object(std::string_view id) const {
  for (const auto& o : objects_)
    if (o.id == id) return &o;
  return nullptr;
}

std::vector<std::string> SemanticField::labels() const {
  std::set<std::string> all;
  for (const auto& r : rooms_) all.insert(r.label);
  for (const auto& o : objects_) all.insert(o.label);
  return {all.begin(), all.end()};
}

nlohmann::json SemanticField::dump() const {
  return {{"n", config_.dim}, {"seed", config_.seed}, {"labels", labels()}};
}

EncodedInstruction encode_instruction(const Instruction& i, const SemanticField& field) {
  const auto& cfg = field.config();
  switch (i.kind) {
    case InstructionKind::Text:
      return QueryEmbedding{label_embedding(i.target_label, Channel::Visual, cfg.dim, cfg.seed),
                            label_embedding(i.region_label.value_or(i.target_label), Channel::Semantic, cfg.dim, cfg.seed)};
    case InstructionKind::Image: {
      const LabeledExtent* obj = field.find_object(i.embedding_seed);
      if (obj == nullptr) throw Error(ErrorKind::NotFound, "image instruction names unknown object '" + i.embedding_seed + "'");
      const double per_component = cfg.image_noise_sigma / std::sqrt(static_cast<double>(cfg.dim));
      CounterRng rng(hash_combine(hash_combine(cfg.seed, "image-goal"), i.embedding_seed));
      auto perturb = [&](Embedding e) {
        for (double& x : e.values) x += per_component * rng.normal();
        normalize(e.values);
        return e;
      };
      QueryEmbedding q{perturb(label_embedding(obj->label, Channel::Visual, cfg.dim, cfg.seed)),
                       perturb(label_embedding(obj->room_label, Channel::Semantic, cfg.dim, cfg.seed))};
      return q;
    }
    case InstructionKind::Position:
      return i.position;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown instruction kind");
}

double combined_similarity(const QueryEmbedding& q, const FieldSample& f, double w_v) {
  if (w_v < 0.0 || w_v > 1.0) throw Error(ErrorKind::InvalidArgument, "w_v must lie in [0,1]");
  if (q.c.dim() != f.visual.dim() || q.s.dim() != f.semantic.dim())
    throw Error(ErrorKind::InvalidArgument, "embedding dimension mismatch");
  if (f.is_sentinel()) return 0.0;
  return w_v * cosine(q.c, f.visual) + (1.0 - w_v) * cosine(q.s, f.semantic);
}

}  // namespace hiernav

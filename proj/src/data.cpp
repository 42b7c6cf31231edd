#include "diffmia/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "diffmia/csvio.hpp"
#include "diffmia/rng.hpp"
#include "json.hpp"

namespace diffmia {

namespace {

std::vector<std::vector<double>> component_means(int components, int dim, double separation) {
  std::vector<std::vector<double>> means(static_cast<size_t>(components),
                                         std::vector<double>(static_cast<size_t>(dim), 0.0));
  if (components == 1) return means;
  if (components <= dim) {
    // Scaled axis vectors: pairwise distance is exactly `separation`.
    const double r = separation / std::sqrt(2.0);
    for (int c = 0; c < components; ++c) {
      means[static_cast<size_t>(c)][static_cast<size_t>(c)] = r;
    }
  } else {
    if (dim < 2) throw std::invalid_argument("make_gaussian_mixture: components > dim requires dim >= 2");
    // Circle in the first two coordinates; adjacent means `separation` apart.
    const double radius = separation / (2.0 * std::sin(3.14159265358979323846 / components));
    for (int c = 0; c < components; ++c) {
      const double angle = 2.0 * 3.14159265358979323846 * c / components;
      means[static_cast<size_t>(c)][0] = radius * std::cos(angle);
      means[static_cast<size_t>(c)][1] = radius * std::sin(angle);
    }
  }
  return means;
}

}  // namespace

Dataset make_gaussian_mixture(int n, int components, int dim, double separation, uint64_t seed) {
  if (n < 1 || components < 1 || dim < 1) {
    throw std::invalid_argument("make_gaussian_mixture: sizes must be positive");
  }
  if (separation <= 0.0) {
    throw std::invalid_argument("make_gaussian_mixture: separation must be positive");
  }
  Dataset ds;
  ds.name = "gaussian_mixture";
  ds.dim = dim;
  ds.components = components;
  ds.separation = separation;
  ds.seed = seed;
  ds.standardize_mean.assign(static_cast<size_t>(dim), 0.0);
  ds.standardize_scale.assign(static_cast<size_t>(dim), 1.0);

  const auto means = component_means(components, dim, separation);
  Rng rng(mix_seed({0xDA7Au, seed}));
  ds.points.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto& mu = means[static_cast<size_t>(i % components)];
    auto& p = ds.points[static_cast<size_t>(i)];
    p.resize(static_cast<size_t>(dim));
    for (int j = 0; j < dim; ++j) {
      p[static_cast<size_t>(j)] = mu[static_cast<size_t>(j)] + rng.gaussian();
    }
  }
  std::vector<int> all(static_cast<size_t>(n));
  std::iota(all.begin(), all.end(), 0);
  standardize(ds, all);
  return ds;
}

void standardize(Dataset& dataset, const std::vector<int>& ids) {
  if (ids.empty()) throw std::invalid_argument("standardize: empty id set");
  const int dim = dataset.dim;
  std::vector<double> mean(static_cast<size_t>(dim), 0.0);
  std::vector<double> sq(static_cast<size_t>(dim), 0.0);
  for (int id : ids) {
    const auto& p = dataset.points.at(static_cast<size_t>(id));
    for (int j = 0; j < dim; ++j) {
      mean[static_cast<size_t>(j)] += p[static_cast<size_t>(j)];
    }
  }
  for (auto& m : mean) m /= static_cast<double>(ids.size());
  for (int id : ids) {
    const auto& p = dataset.points.at(static_cast<size_t>(id));
    for (int j = 0; j < dim; ++j) {
      const double d = p[static_cast<size_t>(j)] - mean[static_cast<size_t>(j)];
      sq[static_cast<size_t>(j)] += d * d;
    }
  }
  std::vector<double> scale(static_cast<size_t>(dim));
  for (int j = 0; j < dim; ++j) {
    const double var = sq[static_cast<size_t>(j)] / static_cast<double>(ids.size());
    scale[static_cast<size_t>(j)] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  for (auto& p : dataset.points) {
    for (int j = 0; j < dim; ++j) {
      p[static_cast<size_t>(j)] = (p[static_cast<size_t>(j)] - mean[static_cast<size_t>(j)]) /
                                  scale[static_cast<size_t>(j)];
    }
  }
  for (int j = 0; j < dim; ++j) {
    // Compose with the transform already applied.
    dataset.standardize_mean[static_cast<size_t>(j)] +=
        mean[static_cast<size_t>(j)] * dataset.standardize_scale[static_cast<size_t>(j)];
    dataset.standardize_scale[static_cast<size_t>(j)] *= scale[static_cast<size_t>(j)];
  }
}

SplitSpec split(const Dataset& dataset, int member_count, int query_size, uint64_t seed) {
  const int n = static_cast<int>(dataset.points.size());
  if (member_count < 1) throw std::invalid_argument("split: member_count must be positive");
  if (query_size < 2 || query_size % 2 != 0) {
    throw std::invalid_argument("split: query_size must be a positive even number");
  }
  const int per_side = query_size / 2;
  if (per_side > member_count) {
    throw std::invalid_argument("split: query members exceed member pool");
  }
  if (member_count + per_side > n) {
    throw std::invalid_argument("split: non-member pool too small");
  }

  std::vector<int> ids(static_cast<size_t>(n));
  std::iota(ids.begin(), ids.end(), 0);
  Rng rng(mix_seed({0x5B71Du, seed}));
  // Fisher-Yates with the deterministic stream.
  for (int i = n - 1; i > 0; --i) {
    const int j = rng.uniform_int(0, i);
    std::swap(ids[static_cast<size_t>(i)], ids[static_cast<size_t>(j)]);
  }

  SplitSpec spec;
  spec.seed = seed;
  spec.member_ids.assign(ids.begin(), ids.begin() + member_count);
  spec.nonmember_ids.assign(ids.begin() + member_count, ids.end());
  spec.query_member_ids.assign(spec.member_ids.begin(), spec.member_ids.begin() + per_side);
  spec.query_nonmember_ids.assign(spec.nonmember_ids.begin(), spec.nonmember_ids.begin() + per_side);
  return spec;
}

std::vector<std::vector<double>> gather(const Dataset& dataset, const std::vector<int>& ids) {
  std::vector<std::vector<double>> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(dataset.points.at(static_cast<size_t>(id)));
  return out;
}

QuerySet make_query_set(const Dataset& dataset, const SplitSpec& spec) {
  QuerySet query;
  query.reserve(spec.query_member_ids.size() + spec.query_nonmember_ids.size());
  for (int id : spec.query_member_ids) {
    query.push_back({id, dataset.points.at(static_cast<size_t>(id)), true});
  }
  for (int id : spec.query_nonmember_ids) {
    query.push_back({id, dataset.points.at(static_cast<size_t>(id)), false});
  }
  return query;
}

namespace {

constexpr char kMagic[4] = {'D', 'M', 'I', 'A'};
constexpr uint32_t kFormatVersion = 1;

void put_u32(std::string& buf, uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& buf, uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& buf, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(buf, bits);
}

void put_f32(std::string& buf, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(buf, bits);
}

void put_str(std::string& buf, const std::string& s) {
  put_u32(buf, static_cast<uint32_t>(s.size()));
  buf.append(s);
}

class Reader {
 public:
  Reader(const std::string& data, const std::string& path) : data_(data), path_(path) {}

  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() {
    const uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  float f32() {
    const uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  std::string str() {
    const uint32_t len = u32();
    need(len);
    std::string s = data_.substr(pos_, len);
    pos_ += len;
    return s;
  }
  void raw(char* out, size_t len) {
    need(len);
    std::memcpy(out, data_.data() + pos_, len);
    pos_ += len;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(size_t len) {
    if (pos_ + len > data_.size()) {
      throw CheckpointError(CheckpointError::Kind::Truncated, "checkpoint truncated: " + path_);
    }
  }
  const std::string& data_;
  std::string path_;
  size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const DiffusionModel& model, const std::string& path) {
  std::string buf;
  buf.append(kMagic, 4);
  put_u32(buf, kFormatVersion);
  put_u32(buf, static_cast<uint32_t>(model.data_dim));
  put_u32(buf, model.parameterization == Parameterization::EpsilonPrediction ? 0u : 1u);
  put_u32(buf, model.schedule.kind == ScheduleKind::Linear ? 0u : 1u);
  put_u32(buf, static_cast<uint32_t>(model.schedule.steps));
  for (double a : model.schedule.alphas) put_f64(buf, a);

  const DenseNet& net = model.net;
  put_u32(buf, net.activation == Activation::SiLU ? 0u : 1u);
  put_u32(buf, static_cast<uint32_t>(net.time_embed.dim));
  put_u32(buf, static_cast<uint32_t>(net.layer_dims.size()));
  for (int d : net.layer_dims) put_u32(buf, static_cast<uint32_t>(d));
  put_u32(buf, static_cast<uint32_t>(net.layer_count()));
  for (size_t l = 0; l < net.layer_count(); ++l) {
    const uint32_t rows = static_cast<uint32_t>(net.layer_dims[l + 1]);
    const uint32_t cols = static_cast<uint32_t>(net.layer_dims[l]);
    put_str(buf, "w" + std::to_string(l));
    put_u32(buf, 2);
    put_u32(buf, rows);
    put_u32(buf, cols);
    for (float v : net.weights[l]) put_f32(buf, v);
    put_str(buf, "b" + std::to_string(l));
    put_u32(buf, 1);
    put_u32(buf, rows);
    for (float v : net.biases[l]) put_f32(buf, v);
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError(CheckpointError::Kind::Io, "cannot open for write: " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw CheckpointError(CheckpointError::Kind::Io, "write failed: " + path);
}

DiffusionModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointError::Kind::Io, "cannot open: " + path);
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r(data, path);

  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw CheckpointError(CheckpointError::Kind::BadMagic, "not a checkpoint file: " + path);
  }
  const uint32_t version = r.u32();
  if (version != kFormatVersion) {
    throw CheckpointError(CheckpointError::Kind::VersionMismatch,
                          "unsupported checkpoint version " + std::to_string(version));
  }

  DiffusionModel model;
  model.data_dim = static_cast<int>(r.u32());
  model.parameterization = r.u32() == 0 ? Parameterization::EpsilonPrediction : Parameterization::X0Prediction;
  model.schedule.kind = r.u32() == 0 ? ScheduleKind::Linear : ScheduleKind::Cosine;
  model.schedule.steps = static_cast<int>(r.u32());
  if (model.schedule.steps < 1 || model.schedule.steps > (1 << 24)) {
    throw CheckpointError(CheckpointError::Kind::ShapeMismatch, "implausible step count");
  }
  model.schedule.alphas.resize(static_cast<size_t>(model.schedule.steps) + 1);
  for (auto& a : model.schedule.alphas) a = r.f64();
  model.schedule.alpha_bars.assign(model.schedule.alphas.size(), 1.0);
  for (size_t t = 1; t < model.schedule.alphas.size(); ++t) {
    model.schedule.alpha_bars[t] = model.schedule.alpha_bars[t - 1] * model.schedule.alphas[t];
  }

  DenseNet& net = model.net;
  net.data_dim = model.data_dim;
  net.activation = r.u32() == 0 ? Activation::SiLU : Activation::ReLU;
  net.time_embed = TimeEmbedding::make(static_cast<int>(r.u32()));
  const uint32_t dim_count = r.u32();
  if (dim_count < 2 || dim_count > 64) {
    throw CheckpointError(CheckpointError::Kind::ShapeMismatch, "implausible layer structure");
  }
  net.layer_dims.resize(dim_count);
  for (auto& d : net.layer_dims) d = static_cast<int>(r.u32());
  if (net.layer_dims.front() != model.data_dim + net.time_embed.dim ||
      net.layer_dims.back() != model.data_dim) {
    throw CheckpointError(CheckpointError::Kind::ShapeMismatch, "layer dims inconsistent with header");
  }
  const uint32_t layer_count = r.u32();
  if (layer_count != dim_count - 1) {
    throw CheckpointError(CheckpointError::Kind::ShapeMismatch, "layer count mismatch");
  }
  net.weights.resize(layer_count);
  net.biases.resize(layer_count);
  for (uint32_t l = 0; l < layer_count; ++l) {
    const uint32_t rows = static_cast<uint32_t>(net.layer_dims[l + 1]);
    const uint32_t cols = static_cast<uint32_t>(net.layer_dims[l]);
    const std::string wname = r.str();
    if (wname != "w" + std::to_string(l) || r.u32() != 2 || r.u32() != rows || r.u32() != cols) {
      throw CheckpointError(CheckpointError::Kind::ShapeMismatch, "weight record mismatch at layer " + std::to_string(l));
    }
    net.weights[l].resize(static_cast<size_t>(rows) * cols);
    for (auto& v : net.weights[l]) v = r.f32();
    const std::string bname = r.str();
    if (bname != "b" + std::to_string(l) || r.u32() != 1 || r.u32() != rows) {
      throw CheckpointError(CheckpointError::Kind::ShapeMismatch, "bias record mismatch at layer " + std::to_string(l));
    }
    net.biases[l].resize(rows);
    for (auto& v : net.biases[l]) v = r.f32();
  }
  if (!r.done()) {
    throw CheckpointError(CheckpointError::Kind::ShapeMismatch, "trailing bytes in checkpoint");
  }
  return model;
}

void save_dataset(const Dataset& dataset, const std::string& csv_path) {
  std::vector<std::string> header;
  header.reserve(static_cast<size_t>(dataset.dim));
  for (int j = 0; j < dataset.dim; ++j) header.push_back("x" + std::to_string(j));
  std::vector<std::vector<std::string>> rows;
  rows.reserve(dataset.points.size());
  for (const auto& p : dataset.points) {
    std::vector<std::string> row;
    row.reserve(p.size());
    for (double v : p) row.push_back(format_double(v));
    rows.push_back(std::move(row));
  }
  write_csv(csv_path, header, rows);

  nlohmann::json meta;
  meta["name"] = dataset.name;
  meta["dim"] = dataset.dim;
  meta["components"] = dataset.components;
  meta["separation"] = dataset.separation;
  meta["seed"] = dataset.seed;
  meta["standardize_mean"] = dataset.standardize_mean;
  meta["standardize_scale"] = dataset.standardize_scale;
  std::ofstream out(csv_path + ".meta.json", std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("save_dataset: cannot write sidecar for " + csv_path);
  out << meta.dump(2) << "\n";
}

Dataset load_dataset(const std::string& csv_path) {
  std::vector<std::string> header;
  const auto rows = read_csv(csv_path, &header);
  Dataset ds;
  ds.dim = static_cast<int>(header.size());
  ds.points.reserve(rows.size());
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != ds.dim) {
      throw std::runtime_error("load_dataset: ragged row in " + csv_path);
    }
    std::vector<double> p(row.size());
    for (size_t j = 0; j < row.size(); ++j) p[j] = std::stod(row[j]);
    ds.points.push_back(std::move(p));
  }
  std::ifstream in(csv_path + ".meta.json", std::ios::binary);
  if (in) {
    nlohmann::json meta = nlohmann::json::parse(in);
    ds.name = meta.value("name", std::string());
    ds.components = meta.value("components", 1);
    ds.separation = meta.value("separation", 0.0);
    ds.seed = meta.value("seed", static_cast<uint64_t>(0));
    ds.standardize_mean = meta.value("standardize_mean", std::vector<double>(static_cast<size_t>(ds.dim), 0.0));
    ds.standardize_scale = meta.value("standardize_scale", std::vector<double>(static_cast<size_t>(ds.dim), 1.0));
  } else {
    ds.standardize_mean.assign(static_cast<size_t>(ds.dim), 0.0);
    ds.standardize_scale.assign(static_cast<size_t>(ds.dim), 1.0);
  }
  return ds;
}

void save_vectors_csv(const std::vector<std::vector<double>>& vecs, const std::string& path) {
  std::vector<std::string> header;
  if (!vecs.empty()) {
    for (size_t j = 0; j < vecs.front().size(); ++j) header.push_back("x" + std::to_string(j));
  }
  std::vector<std::vector<std::string>> rows;
  rows.reserve(vecs.size());
  for (const auto& v : vecs) {
    std::vector<std::string> row;
    row.reserve(v.size());
    for (double x : v) row.push_back(format_double(x));
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

std::vector<std::vector<double>> load_vectors_csv(const std::string& path) {
  std::vector<std::string> header;
  const auto rows = read_csv(path, &header);
  std::vector<std::vector<double>> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    std::vector<double> v(row.size());
    for (size_t j = 0; j < row.size(); ++j) v[j] = std::stod(row[j]);
    out.push_back(std::move(v));
  }
  return out;
}

void save_trajectories_csv(const std::vector<LossTrajectory>& trajectories,
                           const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& traj : trajectories) {
    const char* kind = traj.kind == TrajectoryKind::Exact ? "exact" : "estimated";
    for (const auto& [t, v] : traj.values) {
      rows.push_back({std::to_string(traj.sample_id), kind, std::to_string(t), format_double(v),
                      std::to_string(traj.noise_draws)});
    }
  }
  write_csv(path, {"sample_id", "kind", "t", "value", "noise_draws"}, rows);
}

std::vector<LossTrajectory> load_trajectories_csv(const std::string& path) {
  std::vector<std::string> header;
  const auto rows = read_csv(path, &header);
  std::vector<LossTrajectory> out;
  // Rows for one sample are contiguous in files this module writes.
  for (const auto& row : rows) {
    if (row.size() != 5) throw std::runtime_error("load_trajectories_csv: malformed row in " + path);
    const int64_t sample_id = std::stoll(row[0]);
    const TrajectoryKind kind =
        row[1] == "exact" ? TrajectoryKind::Exact : TrajectoryKind::Estimated;
    if (out.empty() || out.back().sample_id != sample_id || out.back().kind != kind) {
      LossTrajectory traj;
      traj.sample_id = sample_id;
      traj.kind = kind;
      traj.noise_draws = std::stoi(row[4]);
      out.push_back(std::move(traj));
    }
    out.back().values[std::stoi(row[2])] = std::stod(row[3]);
  }
  return out;
}

}  // namespace diffmia

#include "kgelab/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "kgelab/rng.hpp"

namespace kgelab {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

std::optional<ModelKind> parse_kind(std::string_view name) {
  if (name == "distmult") return ModelKind::DistMult;
  if (name == "complex") return ModelKind::ComplEx;
  if (name == "transe") return ModelKind::TransE;
  return std::nullopt;
}

Model init_model(ModelKind kind, int n_entities, int n_relations, int dim, std::uint64_t seed,
                 Real margin) {
  if (n_entities <= 0 || n_relations <= 0 || dim <= 0) {
    throw std::invalid_argument("init_model: table shapes must be positive");
  }
  Model m;
  m.kind = kind;
  m.dim = dim;
  m.margin = margin;
  const int cols = m.storage_cols();
  m.entities.resize(n_entities, cols);
  m.relations.resize(n_relations, cols);
  const Real bound = 1.0 / std::sqrt(static_cast<Real>(dim));
  Rng rng(seed);
  for (Eigen::Index i = 0; i < m.entities.rows(); ++i)
    for (Eigen::Index j = 0; j < m.entities.cols(); ++j)
      m.entities(i, j) = rng.uniform(-bound, bound);
  for (Eigen::Index i = 0; i < m.relations.rows(); ++i)
    for (Eigen::Index j = 0; j < m.relations.cols(); ++j)
      m.relations(i, j) = rng.uniform(-bound, bound);
  return m;
}

namespace {

constexpr char kMagic[8] = {'K', 'G', 'E', 'M', 'B', 'E', 'D', '1'};

void write_table(const std::string& path, const Matrix& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(kMagic, sizeof(kMagic));
  const std::uint64_t rows = static_cast<std::uint64_t>(table.rows());
  const std::uint64_t cols = static_cast<std::uint64_t>(table.cols());
  out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
  out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
  std::vector<float> buf(static_cast<std::size_t>(rows * cols));
  std::size_t idx = 0;
  for (Eigen::Index i = 0; i < table.rows(); ++i)
    for (Eigen::Index j = 0; j < table.cols(); ++j) buf[idx++] = static_cast<float>(table(i, j));
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!out) throw std::runtime_error("short write to " + path);
}

Matrix read_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error(path + ": bad magic, not an embedding table");
  }
  std::uint64_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
  in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
  if (!in || rows == 0 || cols == 0 || rows > (1ULL << 32) || cols > (1ULL << 20)) {
    throw std::runtime_error(path + ": implausible table shape");
  }
  std::vector<float> buf(static_cast<std::size_t>(rows * cols));
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!in) throw std::runtime_error(path + ": truncated table");
  Matrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::size_t idx = 0;
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) = static_cast<Real>(buf[idx++]);
  if (!out.allFinite()) throw std::runtime_error(path + ": non-finite values in table");
  return out;
}

}  // namespace

void save_checkpoint(const std::string& dir, const Model& model, std::uint64_t seed,
                     const std::string& train_config_hash) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  fs::path base(dir);
  {
    std::ofstream meta((base / "meta.txt").string());
    if (!meta) throw std::runtime_error("cannot write meta.txt under " + dir);
    meta << "kind=" << kind_name(model.kind) << '\n'
         << "dim=" << model.dim << '\n'
         << "n_entities=" << model.n_entities() << '\n'
         << "n_relations=" << model.n_relations() << '\n'
         << "margin=" << model.margin << '\n'
         << "seed=" << seed << '\n'
         << "train_config_hash=" << train_config_hash << '\n';
  }
  write_table((base / "entities.bin").string(), model.entities);
  write_table((base / "relations.bin").string(), model.relations);
}

Model load_checkpoint(const std::string& dir, CheckpointMeta* meta_out) {
  namespace fs = std::filesystem;
  fs::path base(dir);
  std::unordered_map<std::string, std::string> kv;
  {
    std::ifstream meta((base / "meta.txt").string());
    if (!meta) throw std::runtime_error("cannot open meta.txt under " + dir);
    std::string line;
    while (std::getline(meta, line)) {
      if (line.empty()) continue;
      std::size_t eq = line.find('=');
      if (eq == std::string::npos) throw std::runtime_error(dir + "/meta.txt: malformed line");
      kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
  }
  auto need = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw std::runtime_error(dir + "/meta.txt: missing key " + key);
    return it->second;
  };

  CheckpointMeta meta;
  auto kind = parse_kind(need("kind"));
  if (!kind) throw std::runtime_error(dir + "/meta.txt: unknown kind " + need("kind"));
  meta.kind = *kind;
  meta.dim = std::stoi(need("dim"));
  meta.n_entities = std::stoi(need("n_entities"));
  meta.n_relations = std::stoi(need("n_relations"));
  meta.margin = std::stod(need("margin"));
  meta.seed = std::stoull(need("seed"));
  meta.train_config_hash = need("train_config_hash");

  Model m;
  m.kind = meta.kind;
  m.dim = meta.dim;
  m.margin = meta.margin;
  m.entities = read_table((base / "entities.bin").string());
  m.relations = read_table((base / "relations.bin").string());
  if (m.entities.rows() != meta.n_entities || m.relations.rows() != meta.n_relations ||
      m.entities.cols() != m.storage_cols() || m.relations.cols() != m.storage_cols()) {
    throw std::runtime_error(dir + ": table shapes disagree with meta.txt");
  }
  if (meta_out) *meta_out = meta;
  return m;
}

}  // namespace kgelab

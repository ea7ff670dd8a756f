#include "exset/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "exset/errors.hpp"
#include "exset/normal.hpp"
#include "exset/rng.hpp"

namespace exset {

namespace {

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open file: " + path);
  return in;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

struct MmData {
  int n = 0;
  std::vector<Eigen::Triplet<double>> entries;
};

MmData read_mm(const std::string& path) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("%%MatrixMarket", 0) != 0)
    throw input_error(path + ": missing MatrixMarket header");
  const std::string header = lower(line);
  if (header.find("matrix") == std::string::npos ||
      header.find("coordinate") == std::string::npos ||
      header.find("real") == std::string::npos)
    throw input_error(path + ": only coordinate real matrices are supported");
  const bool symmetric = header.find("symmetric") != std::string::npos;
  if (!symmetric && header.find("general") == std::string::npos)
    throw input_error(path + ": unsupported symmetry qualifier");

  while (std::getline(in, line))
    if (!line.empty() && line[0] != '%') break;
  std::istringstream sizes(line);
  int rows = 0, cols = 0;
  long nnz = 0;
  if (!(sizes >> rows >> cols >> nnz) || rows != cols || rows < 1)
    throw input_error(path + ": bad size line");

  MmData data;
  data.n = rows;
  data.entries.reserve(nnz);
  for (long k = 0; k < nnz; ++k) {
    int i = 0, j = 0;
    double v = 0.0;
    if (!(in >> i >> j >> v))
      throw input_error(path + ": truncated entry list");
    if (i < 1 || i > rows || j < 1 || j > cols)
      throw input_error(path + ": entry out of range");
    data.entries.emplace_back(i - 1, j - 1, v);
  }
  return data;
}

using nlohmann::json;

}  // namespace

SparseSymmetricMatrix read_matrix_market(const std::string& path) {
  const MmData data = read_mm(path);
  return SparseSymmetricMatrix::from_triplets(data.n, data.entries);
}

Matrix read_matrix_market_dense(const std::string& path) {
  const MmData data = read_mm(path);
  Matrix m = Matrix::Zero(data.n, data.n);
  for (const auto& t : data.entries) {
    m(t.row(), t.col()) = t.value();
    m(t.col(), t.row()) = t.value();
  }
  return m;
}

void write_matrix_market(const std::string& path,
                         const SparseSymmetricMatrix& m) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot write file: " + path);
  out << "%%MatrixMarket matrix coordinate real symmetric\n";
  const auto& e = m.eigen();
  std::vector<std::string> lines;
  for (int j = 0; j < e.outerSize(); ++j)
    for (SparseMat::InnerIterator it(e, j); it; ++it)
      if (it.row() >= j)
        lines.push_back(std::to_string(it.row() + 1) + " " +
                        std::to_string(j + 1) + " " +
                        format_double(it.value()));
  out << m.dim() << " " << m.dim() << " " << lines.size() << "\n";
  for (const auto& l : lines) out << l << "\n";
}

Vector read_csv_vector(const std::string& path) {
  std::ifstream in = open_input(path);
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    values.push_back(std::stod(line));
  }
  if (values.empty()) throw input_error(path + ": empty vector file");
  Vector v(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) v[i] = values[i];
  return v;
}

void write_csv_vector(const std::string& path, const Vector& v) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot write file: " + path);
  for (int i = 0; i < v.size(); ++i) out << format_double(v[i]) << "\n";
}

Matrix read_csv_matrix(const std::string& path) {
  std::ifstream in = open_input(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && row.size() != rows.front().size())
      throw input_error(path + ": ragged rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw input_error(path + ": empty matrix file");
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.front().size(); ++j) m(i, j) = rows[i][j];
  return m;
}

ParamConfigSet read_config_set(const std::string& path) {
  std::ifstream in = open_input(path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw input_error(path + ": " + e.what());
  }
  if (!doc.is_array() || doc.empty())
    throw input_error(path + ": expected a non-empty JSON array");
  const auto base = std::filesystem::path(path).parent_path();
  const auto resolve = [&](const std::string& p) {
    const std::filesystem::path fp(p);
    return fp.is_absolute() ? fp.string() : (base / fp).string();
  };

  std::vector<ParamConfig> configs;
  for (const auto& item : doc) {
    std::map<std::string, double> theta;
    if (item.contains("theta"))
      for (auto& [k, v] : item.at("theta").items())
        theta[k] = v.get<double>();
    const double weight = item.value("weight", 1.0);
    if (!item.contains("mean_file"))
      throw input_error(path + ": configuration lacks mean_file");
    Vector mean = read_csv_vector(resolve(item.at("mean_file")));
    if (item.contains("precision_file")) {
      auto q = read_matrix_market(resolve(item.at("precision_file")));
      configs.push_back({std::move(theta), weight,
                         GaussianPosterior(std::move(mean), std::move(q))});
    } else if (item.contains("covariance_file")) {
      auto c = read_matrix_market_dense(resolve(item.at("covariance_file")));
      configs.push_back({std::move(theta), weight,
                         GaussianPosterior(std::move(mean), std::move(c))});
    } else {
      throw input_error(path +
                        ": configuration needs precision_file or "
                        "covariance_file");
    }
  }
  return ParamConfigSet(std::move(configs));
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open file: " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 14];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
    if (!in) break;
  }
  char out[20];
  std::snprintf(out, sizeof(out), "%016llx",
                static_cast<unsigned long long>(h));
  return std::string("fnv1a64:") + out;
}

std::string format_double(double v) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::stod(buf) == v) break;
  }
  return buf;
}

}  // namespace exset

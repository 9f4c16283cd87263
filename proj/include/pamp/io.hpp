#pragma once

// Portable files.
//
// Binary container: the 8-byte magic "PAMPBIN1", a little-endian uint64 header
// length, a JSON header, then the arrays listed in header["arrays"] as raw
// little-endian float64 in that order. Matrices are row-major.

#include "pamp/amp.hpp"
#include "pamp/common.hpp"
#include "pamp/denoiser.hpp"
#include "pamp/signal_model.hpp"
#include "pamp/state_evolution.hpp"
#include "pamp/tuner.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace pamp {

using json = nlohmann::json;

inline constexpr std::array<char, 8> kBinaryMagic{'P', 'A', 'M', 'P', 'B', 'I', 'N', '1'};

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw IoError("cannot format number");
  return std::string(buf.data(), end);
}

inline double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  while (last > first && (last[-1] == ' ' || last[-1] == '\r' || last[-1] == '\t')) --last;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) throw IoError("not a number: '" + s + "'");
  return v;
}

namespace detail {

inline void put_u64_le(std::ostream& os, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xffU);
  os.write(b.data(), 8);
}

inline std::uint64_t get_u64_le(std::istream& is) {
  std::array<unsigned char, 8> b{};
  is.read(reinterpret_cast<char*>(b.data()), 8);
  if (!is) throw IoError("truncated file");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
  return v;
}

inline void put_doubles(std::ostream& os, const double* data, std::size_t count) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
  } else {
    for (std::size_t i = 0; i < count; ++i) put_u64_le(os, std::bit_cast<std::uint64_t>(data[i]));
  }
}

inline void get_doubles(std::istream& is, double* data, std::size_t count) {
  if constexpr (std::endian::native == std::endian::little) {
    is.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
    if (!is) throw IoError("truncated payload");
  } else {
    for (std::size_t i = 0; i < count; ++i) data[i] = std::bit_cast<double>(get_u64_le(is));
  }
}

}  // namespace detail

struct BinaryArray {
  std::string name;
  std::vector<double> values;
};

struct BinaryFile {
  json header;
  std::vector<BinaryArray> arrays;

  const BinaryArray* find(const std::string& name) const {
    for (const auto& a : arrays)
      if (a.name == name) return &a;
    return nullptr;
  }
};

inline void write_binary(const std::filesystem::path& path, json header, const std::vector<BinaryArray>& arrays) {
  header["arrays"] = json::array();
  for (const auto& a : arrays) header["arrays"].push_back({{"name", a.name}, {"length", a.values.size()}});
  const std::string text = header.dump();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(kBinaryMagic.data(), kBinaryMagic.size());
  detail::put_u64_le(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& a : arrays) detail::put_doubles(os, a.values.data(), a.values.size());
  if (!os) throw IoError("write failed: " + path.string());
}

inline BinaryFile read_binary(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kBinaryMagic) throw IoError(path.string() + ": not a pamp binary file");
  const std::uint64_t len = detail::get_u64_le(is);
  if (len > (1ULL << 30)) throw IoError(path.string() + ": header too large");
  std::string text(len, '\0');
  is.read(text.data(), static_cast<std::streamsize>(len));
  if (!is) throw IoError(path.string() + ": truncated header");
  BinaryFile f;
  try {
    f.header = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": bad header: " + e.what());
  }
  if (!f.header.contains("arrays") || !f.header["arrays"].is_array()) throw IoError(path.string() + ": no arrays");
  for (const auto& entry : f.header["arrays"]) {
    BinaryArray a;
    a.name = entry.at("name").get<std::string>();
    a.values.resize(entry.at("length").get<std::size_t>());
    detail::get_doubles(is, a.values.data(), a.values.size());
    f.arrays.push_back(std::move(a));
  }
  return f;
}

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }
inline Vector to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline json to_json(const ProblemConfig& c) {
  return {{"N", c.N},         {"delta", c.delta}, {"rho", c.rho},
          {"sigma_w", c.sigma_w}, {"nonzero_value", c.nonzero_value}, {"seed", c.seed}};
}

inline ProblemConfig problem_config_from_json(const json& j) {
  ProblemConfig c;
  c.N = j.at("N").get<std::size_t>();
  c.delta = j.at("delta").get<double>();
  c.rho = j.at("rho").get<double>();
  c.sigma_w = j.value("sigma_w", 0.0);
  c.nonzero_value = j.value("nonzero_value", 1.0);
  c.seed = j.value("seed", std::uint64_t{0});
  return c;
}

inline void save_instance(const std::filesystem::path& path, const ProblemInstance& inst) {
  json h;
  h["format"] = "pamp-instance";
  h["version"] = 1;
  h["config"] = to_json(inst.config);
  h["dims"] = {{"n", inst.rows()}, {"N", inst.cols()}, {"k", inst.config.k()}};
  h["layout"] = "row-major";
  h["column_norm_min"] = inst.min_column_norm;
  h["column_norm_max"] = inst.max_column_norm;
  std::vector<BinaryArray> arrays;
  arrays.push_back({"A", std::vector<double>(inst.A.data(), inst.A.data() + inst.A.size())});
  if (inst.has_signal()) arrays.push_back({"x_o", to_std(inst.x_o)});
  arrays.push_back({"w", to_std(inst.w)});
  arrays.push_back({"y", to_std(inst.y)});
  write_binary(path, h, arrays);
}

inline ProblemInstance load_instance(const std::filesystem::path& path) {
  const BinaryFile f = read_binary(path);
  if (f.header.value("format", "") != "pamp-instance") throw IoError(path.string() + ": not an instance file");
  ProblemInstance inst;
  inst.config = problem_config_from_json(f.header.at("config"));
  const auto n = f.header.at("dims").at("n").get<Eigen::Index>();
  const auto N = f.header.at("dims").at("N").get<Eigen::Index>();
  const BinaryArray* A = f.find("A");
  const BinaryArray* y = f.find("y");
  if (!A || !y) throw IoError(path.string() + ": missing A or y");
  if (static_cast<Eigen::Index>(A->values.size()) != n * N || static_cast<Eigen::Index>(y->values.size()) != n)
    throw IoError(path.string() + ": array sizes disagree with dims");
  inst.A = Eigen::Map<const Matrix>(A->values.data(), n, N);
  inst.y = to_eigen(y->values);
  if (const BinaryArray* x = f.find("x_o")) inst.x_o = to_eigen(x->values);
  if (const BinaryArray* w = f.find("w")) inst.w = to_eigen(w->values);
  column_norm_extrema(inst.A, inst.min_column_norm, inst.max_column_norm);
  return inst;
}

struct StoredObservation {
  Vector x_tilde;
  Vector x_o;  // empty when unknown
  std::optional<double> sigma;
  std::optional<SignalPrior> prior;
};

inline void save_observation(const std::filesystem::path& path, const StoredObservation& obs) {
  json h;
  h["format"] = "pamp-observation";
  h["version"] = 1;
  if (obs.sigma) h["sigma"] = *obs.sigma;
  if (obs.prior) h["prior"] = {{"sparsity_fraction", obs.prior->sparsity_fraction},
                               {"nonzero_value", obs.prior->nonzero_value}, {"kind", "point_mass"}};
  std::vector<BinaryArray> arrays{{"x_tilde", to_std(obs.x_tilde)}};
  if (obs.x_o.size() > 0) arrays.push_back({"x_o", to_std(obs.x_o)});
  write_binary(path, h, arrays);
}

inline StoredObservation load_observation(const std::filesystem::path& path) {
  const BinaryFile f = read_binary(path);
  if (f.header.value("format", "") != "pamp-observation") throw IoError(path.string() + ": not an observation file");
  StoredObservation obs;
  const BinaryArray* xt = f.find("x_tilde");
  if (!xt) throw IoError(path.string() + ": missing x_tilde");
  obs.x_tilde = to_eigen(xt->values);
  if (const BinaryArray* x = f.find("x_o")) obs.x_o = to_eigen(x->values);
  if (f.header.contains("sigma")) obs.sigma = f.header["sigma"].get<double>();
  if (f.header.contains("prior"))
    obs.prior = SignalPrior{f.header["prior"].at("sparsity_fraction").get<double>(),
                            f.header["prior"].at("nonzero_value").get<double>(), PriorKind::PointMass};
  return obs;
}

/// Draw x~ = x_o + sigma u for a k-sparse point-mass signal.
inline StoredObservation make_observation(std::size_t N, std::size_t k, double amplitude, double sigma,
                                          std::uint64_t seed) {
  if (N == 0 || k > N) throw ConfigError("need 0 <= k <= N and N > 0");
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  StoredObservation obs;
  obs.x_o = Vector::Zero(static_cast<Eigen::Index>(N));
  {
    auto engine = make_engine(seed, Stream::Support);
    std::vector<std::size_t> all(N);
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::vector<std::size_t> support;
    std::sample(all.begin(), all.end(), std::back_inserter(support), k, engine);
    for (std::size_t i : support) obs.x_o[static_cast<Eigen::Index>(i)] = amplitude;
  }
  auto engine = make_engine(seed, Stream::Observation);
  std::normal_distribution<double> gauss;
  obs.x_tilde = obs.x_o;
  for (Eigen::Index i = 0; i < obs.x_tilde.size(); ++i) obs.x_tilde[i] += sigma * gauss(engine);
  obs.sigma = sigma;
  obs.prior = SignalPrior{static_cast<double>(k) / static_cast<double>(N), amplitude, PriorKind::PointMass};
  return obs;
}

// ---- CSV ----

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> columns) : columns_(std::move(columns)) {
    for (std::size_t i = 0; i < columns_.size(); ++i) out_ << (i ? "," : "") << columns_[i];
    out_ << '\n';
  }

  template <typename... Cells>
  void row(const Cells&... cells) {
    static_assert(sizeof...(Cells) > 0);
    if (sizeof...(Cells) != columns_.size()) throw IoError("CSV row width mismatch");
    std::size_t i = 0;
    ((out_ << (i++ ? "," : "") << cell(cells)), ...);
    out_ << '\n';
  }

  std::string str() const { return out_.str(); }

  void save(const std::filesystem::path& path) const {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    os << out_.str();
    if (!os) throw IoError("write failed: " + path.string());
  }

 private:
  static std::string cell(double v) { return format_double(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(long v) { return std::to_string(v); }
  static std::string cell(unsigned long v) { return std::to_string(v); }
  static std::string cell(unsigned long long v) { return std::to_string(v); }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(std::string_view v) { return std::string(v); }
  static std::string cell(const char* v) { return v; }

  std::vector<std::string> columns_;
  std::ostringstream out_;
};

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw IoError("CSV has no column '" + name + "'");
  }
  bool has_column(const std::string& name) const {
    return std::find(columns.begin(), columns.end(), name) != columns.end();
  }
  std::vector<double> numbers(const std::string& name) const {
    const std::size_t c = column(name);
    std::vector<double> v;
    v.reserve(rows.size());
    for (const auto& r : rows) v.push_back(parse_double(r.at(c)));
    return v;
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  cells.push_back(cur);
  return cells;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(is, line)) throw IoError(path.string() + ": empty CSV");
  t.columns = split_csv_line(line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    t.rows.push_back(split_csv_line(line));
    if (t.rows.back().size() != t.columns.size()) throw IoError(path.string() + ": ragged CSV row");
  }
  return t;
}

inline std::string risk_curve_csv(const RiskCurve& c) {
  CsvWriter w({"tau", "value", "estimator"});
  for (std::size_t i = 0; i < c.tau_grid.size(); ++i) w.row(c.tau_grid[i], c.values[i], to_string(c.estimator));
  return w.str();
}

inline std::string amp_trajectory_csv(const AmpTrajectory& traj) {
  CsvWriter w({"t", "tau", "sigma_hat", "mse", "sparsity"});
  for (const auto& r : traj.records) w.row(r.t, r.tau, r.sigma_hat, r.mse, r.sparsity);
  return w.str();
}

inline std::string se_trajectory_csv(const SeTrajectory& traj) {
  CsvWriter w({"t", "sigma_sq", "tau", "predicted_mse"});
  for (const auto& s : traj.states) w.row(s.t, s.sigma_sq, s.tau, s.predicted_mse);
  return w.str();
}

inline json to_json(const TunerConfig& c) {
  return {{"delta_n", c.delta_n}, {"alpha", c.alpha},       {"beta", c.beta},
          {"kappa", c.kappa},     {"l0", c.l0},             {"max_inner", c.max_inner},
          {"max_restarts", c.max_restarts}, {"max_backtracks", c.max_backtracks}, {"tau_max", c.tau_max}};
}

inline TunerConfig tuner_config_from_json(const json& j) {
  TunerConfig c;
  c.delta_n = j.value("delta_n", c.delta_n);
  c.alpha = j.value("alpha", c.alpha);
  c.beta = j.value("beta", c.beta);
  c.kappa = j.value("kappa", c.kappa);
  c.l0 = j.value("l0", c.l0);
  c.max_inner = j.value("max_inner", c.max_inner);
  c.max_restarts = j.value("max_restarts", c.max_restarts);
  c.max_backtracks = j.value("max_backtracks", c.max_backtracks);
  c.tau_max = j.value("tau_max", c.tau_max);
  return c;
}

inline json to_json(const TuneResult& r) {
  json traj = json::array();
  for (const auto& p : r.trajectory)
    traj.push_back({{"restart", p.restart}, {"iteration", p.iteration}, {"tau", p.tau}, {"risk", p.risk}, {"l0", p.l0}});
  return {{"tau_hat", r.tau_hat},
          {"restarts", r.restarts},
          {"terminated_by", std::string(to_string(r.terminated_by))},
          {"trajectory", traj},
          {"diagnostics",
           {{"mu_hat", r.diagnostics.mu_hat},
            {"restart_test_enabled", r.diagnostics.restart_test_enabled},
            {"tau_max", r.diagnostics.tau_max},
            {"evaluations", r.diagnostics.evaluations},
            {"exhausted_backtracks", r.diagnostics.exhausted_backtracks}}}};
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw IoError("write failed: " + path.string());
}

/// Thresholds from a file: either a CSV with a `tau` column (e.g. a state
/// evolution export) or one number per line.
inline std::vector<double> load_threshold_sequence(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  std::istringstream is(text);
  std::string first;
  std::getline(is, first);
  std::vector<double> taus;
  if (first.find("tau") != std::string::npos) {
    const CsvTable t = read_csv(path);
    return t.numbers("tau");
  }
  auto take = [&](const std::string& line) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) return;
    taus.push_back(parse_double(line));
  };
  take(first);
  for (std::string line; std::getline(is, line);) take(line);
  return taus;
}

}  // namespace pamp

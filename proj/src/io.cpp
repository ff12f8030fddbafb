#include "conelab/io.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "conelab/error.hpp"

namespace conelab {

namespace {

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<T>();
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json r = Json::array();
    for (int k = 0; k < m.cols(); ++k) r.push_back(m(i, k));
    rows.push_back(r);
  }
  return rows;
}

Eigen::MatrixXd matrix_from(const Json& j) {
  if (!j.is_array()) throw Error("matrix must be an array of rows");
  const int rows = int(j.size());
  const int cols = rows ? int(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (int(j[i].size()) != cols) throw Error("matrix rows must have equal length");
    for (int k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

const char* diag_name(DiagonalKind k) {
  switch (k) {
    case DiagonalKind::Zero: return "zero";
    case DiagonalKind::Constant: return "constant";
    case DiagonalKind::Linear: return "linear";
    case DiagonalKind::Suspension: return "suspension";
  }
  return "?";
}

DiagonalKind diag_from(const std::string& s) {
  if (s == "zero") return DiagonalKind::Zero;
  if (s == "constant") return DiagonalKind::Constant;
  if (s == "linear") return DiagonalKind::Linear;
  if (s == "suspension") return DiagonalKind::Suspension;
  throw Error("unknown diagonal kind '" + s + "' (zero, constant, linear, suspension)");
}

Json modes_json(const std::vector<ModeFlow>& modes) {
  Json a = Json::array();
  for (const auto& m : modes) a.push_back({{"s0", m.s0}, {"s_pi", m.s_pi}, {"mult", m.mult}});
  return a;
}

std::vector<ModeFlow> modes_from(const Json& j) {
  if (!j.is_array()) throw Error("modes must be an array");
  std::vector<ModeFlow> out;
  for (const auto& e : j) {
    if (e.is_array()) {
      if (e.size() < 2 || e.size() > 3) throw Error("mode arrays are [s0, s_pi] or [s0, s_pi, mult]");
      out.push_back({e[0].get<double>(), e[1].get<double>(), e.size() == 3 ? e[2].get<int>() : 1});
    } else {
      out.push_back({e.at("s0").get<double>(), e.at("s_pi").get<double>(), get_or<int>(e, "mult", 1)});
    }
  }
  return out;
}

}  // namespace

std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

Json to_json(const LinkSpectrum& s) {
  Json e = Json::array();
  for (const auto& x : s.entries()) e.push_back(Json::array({x.s, x.m}));
  Json j{{"entries", e}, {"label", s.label()}};
  if (s.link_dimension()) j["link_dimension"] = *s.link_dimension();
  return j;
}

LinkSpectrum spectrum_from_json(const Json& j) {
  if (j.contains("sphere")) {
    auto s = sphere_dirac_spectrum(j.at("sphere").get<int>(), j.at("kmax").get<int>());
    return s;
  }
  if (!j.contains("entries")) throw Error("spectrum needs 'entries' or 'sphere' + 'kmax'");
  std::vector<SpectralEntry> entries;
  for (const auto& e : j.at("entries")) {
    if (e.is_array()) {
      if (e.size() != 2) throw Error("spectrum entries are [s, m] pairs");
      entries.push_back({e[0].get<double>(), e[1].get<int>()});
    } else {
      entries.push_back({e.at("s").get<double>(), e.at("m").get<int>()});
    }
  }
  std::optional<int> dim;
  if (j.contains("link_dimension")) dim = j.at("link_dimension").get<int>();
  return LinkSpectrum(std::move(entries), get_or<std::string>(j, "label", ""), dim);
}

Json to_json(const ConeOperatorSpec& s) {
  Json j;
  j["spectrum"] = to_json(s.spectrum);
  j["theta"] = s.theta;
  j["cone_theta"] = s.cone_theta;
  const auto& p = s.perturbation;
  j["perturbation"] = {
      {"diag", {{"kind", diag_name(p.diag.kind)}, {"amplitude", p.diag.amplitude}}},
      {"coupling",
       {{"kind", p.coupling.kind == CouplingKind::None ? "none" : "tridiagonal"},
        {"shape", p.coupling.shape == CouplingShape::Constant ? "constant" : "linear"},
        {"amplitude", p.coupling.amplitude}}}};
  if (s.bulk) j["bulk"] = {{"block", matrix_json(s.bulk->block)}, {"glue", matrix_json(s.bulk->glue)}};
  j["chirality"] = s.chirality == Chirality::Plus ? "plus" : "minus";
  return j;
}

ConeOperatorSpec spec_from_json(const Json& j) {
  ConeOperatorSpec s;
  if (!j.contains("spectrum")) throw Error("spec needs a 'spectrum'");
  s.spectrum = spectrum_from_json(j.at("spectrum"));
  s.theta = get_or<double>(j, "theta", 1.0);
  s.cone_theta = get_or<double>(j, "cone_theta", s.theta);
  if (!(s.theta > 0.0) || !(s.cone_theta > 0.0) || s.cone_theta > s.theta)
    throw Error("spec needs 0 < cone_theta <= theta");
  if (j.contains("perturbation")) {
    const auto& p = j.at("perturbation");
    if (p.contains("diag")) {
      s.perturbation.diag.kind = diag_from(get_or<std::string>(p.at("diag"), "kind", "zero"));
      s.perturbation.diag.amplitude = get_or<double>(p.at("diag"), "amplitude", 0.0);
    }
    if (p.contains("coupling")) {
      const auto& c = p.at("coupling");
      auto kind = get_or<std::string>(c, "kind", "none");
      if (kind == "none")
        s.perturbation.coupling.kind = CouplingKind::None;
      else if (kind == "tridiagonal")
        s.perturbation.coupling.kind = CouplingKind::Tridiagonal;
      else
        throw Error("unknown coupling kind '" + kind + "' (none, tridiagonal)");
      auto shape = get_or<std::string>(c, "shape", "linear");
      if (shape == "constant")
        s.perturbation.coupling.shape = CouplingShape::Constant;
      else if (shape == "linear")
        s.perturbation.coupling.shape = CouplingShape::Linear;
      else
        throw Error("unknown coupling shape '" + shape + "' (constant, linear)");
      s.perturbation.coupling.amplitude = get_or<double>(c, "amplitude", 0.0);
    }
  }
  if (j.contains("bulk") && !j.at("bulk").is_null()) {
    BulkBlock b;
    b.block = matrix_from(j.at("bulk").at("block"));
    b.glue = matrix_from(j.at("bulk").at("glue"));
    s.bulk = b;
  }
  auto ch = get_or<std::string>(j, "chirality", "plus");
  if (ch != "plus" && ch != "minus") throw Error("chirality must be plus or minus");
  s.chirality = ch == "plus" ? Chirality::Plus : Chirality::Minus;
  return s;
}

Json to_json(const SuspensionModeModel& m) {
  return {{"label", m.label}, {"modes", modes_json(m.modes)}, {"warp_blend", m.warp_blend}, {"kappa", m.kappa}};
}

SuspensionModeModel model_from_json(const Json& j) {
  SuspensionModeModel m;
  if (!j.contains("modes")) throw Error("model needs 'modes'");
  m.modes = modes_from(j.at("modes"));
  m.label = get_or<std::string>(j, "label", "");
  m.warp_blend = get_or<double>(j, "warp_blend", 0.0);
  m.kappa = get_or<double>(j, "kappa", 0.0);
  return m;
}

Json to_json(const DeformFamily& f) {
  const char* k = f.kind == DeformKind::Warp ? "warp" : f.kind == DeformKind::Perturbation ? "perturbation" : "drift";
  Json j{{"kind", k}, {"base", to_json(f.base)}};
  if (f.kind == DeformKind::Perturbation) j["kappa_max"] = f.kappa_max;
  if (f.kind == DeformKind::SpectrumDrift) j["target"] = modes_json(f.target);
  j["N"] = f.svd.N;
  j["r_min"] = f.svd.r_min;
  j["threshold_rel"] = f.svd.threshold_rel;
  return j;
}

DeformFamily family_from_json(const Json& j) {
  DeformFamily f;
  auto k = get_or<std::string>(j, "kind", "");
  if (k == "warp")
    f.kind = DeformKind::Warp;
  else if (k == "perturbation")
    f.kind = DeformKind::Perturbation;
  else if (k == "drift")
    f.kind = DeformKind::SpectrumDrift;
  else
    throw Error("family kind must be warp, perturbation or drift");
  if (!j.contains("base")) throw Error("family needs a 'base' model");
  f.base = model_from_json(j.at("base"));
  f.kappa_max = get_or<double>(j, "kappa_max", 0.0);
  if (j.contains("target")) f.target = modes_from(j.at("target"));
  f.svd.N = get_or<int>(j, "N", f.svd.N);
  f.svd.r_min = get_or<double>(j, "r_min", f.svd.r_min);
  f.svd.threshold_rel = get_or<double>(j, "threshold_rel", f.svd.threshold_rel);
  return f;
}

Json to_json(const WarpedMetricFamily& f) {
  Json l = Json::array();
  for (const auto& x : f.lambdas) l.push_back({{"kind", to_string(x.kind)}, {"a", x.a}, {"p", x.p}});
  return {{"label", f.label}, {"n", f.n}, {"scal_link", f.scal_link}, {"lambdas", l}};
}

WarpedMetricFamily cone_family_from_json(const Json& j) {
  WarpedMetricFamily f;
  f.n = j.at("n").get<int>();
  f.scal_link = get_or<double>(j, "scal_link", 0.0);
  f.label = get_or<std::string>(j, "label", "");
  auto one = [](const Json& x) {
    LambdaFunction l;
    l.kind = lambda_kind_from_string(get_or<std::string>(x, "kind", "one"));
    l.a = get_or<double>(x, "a", 0.0);
    l.p = get_or<double>(x, "p", 2.0);
    return l;
  };
  if (j.contains("lambdas")) {
    for (const auto& x : j.at("lambdas")) f.lambdas.push_back(one(x));
  } else if (j.contains("lambda")) {
    f.lambdas.assign(f.n, one(j.at("lambda")));
  }
  return f;
}

Json to_json(const IndexReport& r) {
  Json det = Json::array();
  for (const auto& d : r.details)
    det.push_back({{"s0", d.mode.s0},
                   {"s_pi", d.mode.s_pi},
                   {"mult", d.mode.mult},
                   {"ker", d.ker},
                   {"coker", d.coker},
                   {"ker_decay", d.ker_decay},
                   {"coker_decay", d.coker_decay},
                   {"smallest_singular", d.smallest_singular},
                   {"smallest_singular_adjoint", d.smallest_singular_adjoint},
                   {"sigma_max", d.sigma_max}});
  return {{"analytic_index", r.analytic_index},
          {"svd_index", r.svd_index},
          {"agree", r.agree},
          {"threshold", r.threshold},
          {"near_zero_singulars", r.near_zero_singulars},
          {"grid", {{"scheme", "two_ended"}, {"N", r.N}, {"refined_N", 2 * r.N}}},
          {"threshold_rel", r.threshold_rel},
          {"decay_tol", r.decay_tol},
          {"modes", det}};
}

Json to_json(const ValidationReport& r) {
  Json j{{"valid", r.valid},
         {"gap_ok", r.gap_ok},
         {"ac6_ok", r.ac6_ok},
         {"cap_right", r.caps.cap_right},
         {"cap_left", r.caps.cap_left},
         {"sup_right", r.sup_right},
         {"sup_left", r.sup_left},
         {"message", r.message}};
  j["theta_prime"] = r.theta_prime ? Json(*r.theta_prime) : Json(nullptr);
  return j;
}

Json grid_metadata(const RadialGrid& g) {
  return {{"scheme", to_string(g.scheme)}, {"N", g.size()}, {"theta", g.theta}, {"r_min", g.r_min}};
}

Json to_json(const RadialGrid& g) {
  Json j = grid_metadata(g);
  j["nodes"] = g.nodes;
  j["weights"] = g.weights;
  return j;
}

Json to_json(const ModeSection& u) {
  auto s = u.spectrum().mode_eigenvalues();
  Json modes = Json::array();
  for (int k = 0; k < u.modes(); ++k) {
    std::vector<double> re(u.nodes()), im(u.nodes());
    for (int i = 0; i < u.nodes(); ++i) {
      re[i] = u.coeffs()(k, i).real();
      im[i] = u.coeffs()(k, i).imag();
    }
    modes.push_back({{"s", s[k]}, {"re", re}, {"im", im}});
  }
  return {{"grid", to_json(u.grid())}, {"spectrum", to_json(u.spectrum())}, {"modes", modes}};
}

std::string section_csv(const ModeSection& u) {
  CsvTable t({"mode_index", "s", "r", "re", "im"});
  const auto& g = u.grid();
  t.meta("grid", to_string(g.scheme));
  t.meta("N", std::to_string(g.size()));
  t.meta("theta", format_real(g.theta));
  t.meta("modes", std::to_string(u.modes()));
  auto s = u.spectrum().mode_eigenvalues();
  for (int k = 0; k < u.modes(); ++k)
    for (int i = 0; i < u.nodes(); ++i)
      t.row({std::to_string(k), format_real(s[k]), format_real(g.nodes[i]), format_real(u.coeffs()(k, i).real()),
             format_real(u.coeffs()(k, i).imag())});
  return t.str();
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Json read_json_file(const std::string& path) {
  try {
    return Json::parse(read_text_file(path));
  } catch (const Json::parse_error& e) {
    throw Error("invalid JSON in '" + path + "': " + e.what());
  }
}

std::string write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << content;
  if (!out) throw Error("write failed for '" + path + "'");
  return sha256_hex(content);
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr))
    throw Error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

void CsvTable::row(std::vector<std::string> cells) {
  if (cells.size() != columns_.size()) throw Error("csv row width mismatch");
  rows_.push_back(std::move(cells));
}

std::string CsvTable::str() const {
  std::ostringstream os;
  for (const auto& [k, v] : meta_) os << "# " << k << ": " << v << "\n";
  for (std::size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << columns_[i];
  os << "\n";
  for (const auto& r : rows_) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << "\n";
  }
  return os.str();
}

Json canonicalize(const Json& j) {
  if (j.is_object()) {
    std::map<std::string, Json> sorted;
    for (auto it = j.begin(); it != j.end(); ++it) sorted[it.key()] = canonicalize(it.value());
    Json out = Json::object();
    for (auto& [k, v] : sorted) out[k] = v;
    return out;
  }
  if (j.is_array()) {
    Json out = Json::array();
    for (const auto& x : j) out.push_back(canonicalize(x));
    return out;
  }
  return j;
}

Json RunManifest::to_json() const {
  Json out = Json::object();
  for (const auto& [k, v] : outputs) out[k] = v;
  return {{"command", command},
          {"inputs", canonicalize(inputs)},
          {"grid", canonicalize(grid)},
          {"version", version},
          {"outputs", out}};
}

}  // namespace conelab

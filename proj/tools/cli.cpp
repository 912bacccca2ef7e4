#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "sislab/density.hpp"
#include "sislab/ensemble.hpp"
#include "sislab/errors.hpp"
#include "sislab/feller.hpp"
#include "sislab/fpe.hpp"
#include "sislab/model.hpp"

namespace sislab::cli {

namespace {

constexpr const char* kToolVersion = "1.0.0";
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------- sha-256

constexpr std::uint32_t kShaK[64] = {
    0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1,
    0x923f82a4, 0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3,
    0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786,
    0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
    0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147,
    0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13,
    0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
    0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
    0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a,
    0x5b9cca4f, 0x682e6ff3, 0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208,
    0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2};

struct Sha256 {
  std::uint32_t h[8] = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                        0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};
  unsigned char block[64];
  std::size_t fill = 0;
  std::uint64_t total = 0;

  static std::uint32_t rotr(std::uint32_t x, int n) {
    return (x >> n) | (x << (32 - n));
  }

  void process(const unsigned char* p) {
    std::uint32_t w[64];
    for (int i = 0; i < 16; ++i)
      w[i] = (std::uint32_t(p[4 * i]) << 24) |
             (std::uint32_t(p[4 * i + 1]) << 16) |
             (std::uint32_t(p[4 * i + 2]) << 8) | p[4 * i + 3];
    for (int i = 16; i < 64; ++i) {
      const std::uint32_t s0 =
          rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
      const std::uint32_t s1 =
          rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
      w[i] = w[i - 16] + s0 + w[i - 7] + s1;
    }
    std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3];
    std::uint32_t e = h[4], f = h[5], g = h[6], hh = h[7];
    for (int i = 0; i < 64; ++i) {
      const std::uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
      const std::uint32_t ch = (e & f) ^ (~e & g);
      const std::uint32_t t1 = hh + s1 + ch + kShaK[i] + w[i];
      const std::uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
      const std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
      const std::uint32_t t2 = s0 + maj;
      hh = g;
      g = f;
      f = e;
      e = d + t1;
      d = c;
      c = b;
      b = a;
      a = t1 + t2;
    }
    h[0] += a;
    h[1] += b;
    h[2] += c;
    h[3] += d;
    h[4] += e;
    h[5] += f;
    h[6] += g;
    h[7] += hh;
  }

  void update(const void* data, std::size_t n) {
    auto* p = static_cast<const unsigned char*>(data);
    total += n;
    while (n) {
      const std::size_t take = std::min(n, std::size_t{64} - fill);
      std::memcpy(block + fill, p, take);
      fill += take;
      p += take;
      n -= take;
      if (fill == 64) {
        process(block);
        fill = 0;
      }
    }
  }

  std::string hex() {
    const std::uint64_t bits = total * 8;
    const unsigned char pad = 0x80;
    update(&pad, 1);
    const unsigned char zero = 0;
    while (fill != 56) update(&zero, 1);
    unsigned char len[8];
    for (int i = 0; i < 8; ++i)
      len[i] = static_cast<unsigned char>(bits >> (56 - 8 * i));
    update(len, 8);
    char out[65];
    for (int i = 0; i < 8; ++i) std::snprintf(out + 8 * i, 9, "%08x", h[i]);
    return std::string(out, 64);
  }
};

// ------------------------------------------------------------ formatting

std::string num17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string num_u64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%llu", static_cast<unsigned long long>(v));
  return buf;
}

std::string json_escape(const std::string& s) {
  std::string out = "\"";
  for (const char ch : s) {
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(ch) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", ch);
          out += buf;
        } else {
          out += ch;
        }
    }
  }
  return out + "\"";
}

class JsonObj {
 public:
  void raw(const char* key, const std::string& value) {
    if (!body_.empty()) body_ += ",\n  ";
    body_ += json_escape(key) + ": " + value;
  }
  void num(const char* key, double v) { raw(key, num17(v)); }
  void uint(const char* key, std::uint64_t v) { raw(key, num_u64(v)); }
  void str(const char* key, const std::string& v) { raw(key, json_escape(v)); }
  void boolean(const char* key, bool v) { raw(key, v ? "true" : "false"); }
  std::string str() const { return "{\n  " + body_ + "\n}"; }

 private:
  std::string body_;
};

std::string json_num_array(const std::vector<double>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += num17(v[i]);
  }
  return out + "]";
}

std::string json_str_array(const std::vector<std::string>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += json_escape(v[i]);
  }
  return out + "]";
}

std::string iso_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

const char* scheme_name(Scheme s) {
  return s == Scheme::TransformedTamedEuler ? "transformed" : "direct";
}

const char* order_name(Order o) {
  switch (o) {
    case Order::Less: return "Less";
    case Order::Equal: return "Equal";
    default: return "Greater";
  }
}

double order_num(Order o) {
  switch (o) {
    case Order::Less: return -1;
    case Order::Equal: return 0;
    default: return 1;
  }
}

const char* limit_name(LimitAtZero l) {
  switch (l) {
    case LimitAtZero::Infinite: return "Infinite";
    case LimitAtZero::Finite: return "Finite";
    default: return "Zero";
  }
}

const char* asymptotic_name(AsymptoticRegime r) {
  return r == AsymptoticRegime::ExtinctAlmostSurely ? "ExtinctAlmostSurely"
                                                    : "Recurrent";
}

const char* persistence_name(PersistenceRegime r) {
  switch (r) {
    case PersistenceRegime::ExtinctLargeProb: return "ExtinctLargeProb";
    case PersistenceRegime::PersistLargeProb: return "PersistLargeProb";
    default: return "NotApplicable";
  }
}

// ------------------------------------------------------------- outputs

struct OutputTracker {
  std::string dir;
  std::vector<std::string> names;

  std::string full(const std::string& name) const { return dir + "/" + name; }

  void write_text(const std::string& name, const std::string& content) {
    names.push_back(name);
    std::ofstream f(full(name), std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open for writing: " + full(name));
    f.write(content.data(),
            static_cast<std::streamsize>(content.size()));
    f.flush();
    if (!f) throw Error("write failed: " + full(name));
  }

  std::FILE* open(const std::string& name) {
    names.push_back(name);
    std::FILE* f = std::fopen(full(name).c_str(), "wb");
    if (!f) throw Error("cannot open for writing: " + full(name));
    return f;
  }

  void finish(std::FILE* f, const std::string& name) {
    const bool bad = std::ferror(f) != 0;
    if (std::fclose(f) != 0 || bad) throw Error("write failed: " + full(name));
  }

  void remove_all() {
    for (const auto& name : names) {
      std::error_code ec;
      std::filesystem::remove(full(name), ec);
    }
    names.clear();
  }
};

}  // namespace

std::string sha256_hex(const void* data, std::size_t size) {
  Sha256 h;
  h.update(data, size);
  return h.hex();
}

std::string sha256_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot read back output: " + path);
  Sha256 h;
  char buf[65536];
  for (;;) {
    f.read(buf, sizeof buf);
    const std::streamsize n = f.gcount();
    if (n <= 0) break;
    h.update(buf, static_cast<std::size_t>(n));
    if (!f) break;
  }
  return h.hex();
}

// -------------------------------------------------------------- sweeps

std::vector<double> SweepAxis::values() const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count));
  if (count == 1) {
    out.push_back(lo);
    return out;
  }
  for (int i = 0; i < count; ++i) {
    if (i == 0) {
      out.push_back(lo);
    } else if (i == count - 1) {
      out.push_back(hi);
    } else if (log) {
      const double t = static_cast<double>(i) / (count - 1);
      out.push_back(std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo))));
    } else {
      const double t = static_cast<double>(i) / (count - 1);
      out.push_back(lo + t * (hi - lo));
    }
  }
  return out;
}

namespace {

const std::set<std::string>& axis_names() {
  static const std::set<std::string> names{"beta",  "gamma", "mu",    "sigma",
                                           "N",     "c0",    "r0_det"};
  return names;
}

}  // namespace

SweepAxis parse_sweep_axis(const std::string& text) {
  const auto bad = [&](const char* why) {
    throw ValidationError(std::string("sweep '") + text + "': " + why +
                          " (expected name=lo:hi:count[:log])");
  };
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) bad("missing name");
  SweepAxis ax;
  ax.name = text.substr(0, eq);
  if (!axis_names().count(ax.name))
    throw ValidationError("unknown sweep axis: " + ax.name);

  std::vector<std::string> parts;
  std::string rest = text.substr(eq + 1);
  std::size_t pos = 0;
  while (true) {
    const auto colon = rest.find(':', pos);
    parts.push_back(rest.substr(pos, colon - pos));
    if (colon == std::string::npos) break;
    pos = colon + 1;
  }
  if (parts.size() < 3 || parts.size() > 4) bad("wrong field count");
  if (parts.size() == 4) {
    if (parts[3] != "log") bad("fourth field must be 'log'");
    ax.log = true;
  }
  try {
    std::size_t used = 0;
    ax.lo = std::stod(parts[0], &used);
    if (used != parts[0].size()) bad("lo is not a number");
    ax.hi = std::stod(parts[1], &used);
    if (used != parts[1].size()) bad("hi is not a number");
    ax.count = std::stoi(parts[2], &used);
    if (used != parts[2].size()) bad("count is not an integer");
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception&) {
    bad("malformed number");
  }
  if (ax.count < 1) bad("count must be >= 1");
  if (!(ax.hi >= ax.lo)) bad("hi must be >= lo");
  if (ax.log && !(ax.lo > 0)) bad("log spacing needs lo > 0");
  return ax;
}

// -------------------------------------------------------------- config

ModelParams RunConfig::resolve_params() const {
  ModelParams p;
  p.gamma = gamma;
  p.mu = mu;
  p.n_total = n_total;
  p.beta = beta ? *beta : *r0_det * (gamma + mu) / n_total;
  p.sigma = sigma ? *sigma
                  : std::sqrt(2 * (gamma + mu) / (*c0 * n_total * n_total));
  p.validate();
  return p;
}

double RunConfig::resolve_i0() const { return i0 ? *i0 : n_total / 2; }

RunConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
    byte = std::min(byte, text.size());
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError("config parse error at line " + std::to_string(line) +
                     ", column " + std::to_string(col));
  }
  if (!j.is_object()) throw ValidationError("config must be a JSON object");

  RunConfig cfg;
  bool have_gamma = false, have_mu = false, have_n = false;

  const auto need_num = [](const nlohmann::json& v, const char* key) {
    if (!v.is_number())
      throw ValidationError(std::string(key) + " must be a number");
    return v.get<double>();
  };
  const auto need_uint = [](const nlohmann::json& v, const char* key) {
    if (!(v.is_number_unsigned() ||
          (v.is_number_integer() && v.get<long long>() >= 0)))
      throw ValidationError(std::string(key) +
                            " must be a nonnegative integer");
    return v.get<std::uint64_t>();
  };
  const auto need_num_array = [](const nlohmann::json& v, const char* key) {
    if (!v.is_array())
      throw ValidationError(std::string(key) + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number())
        throw ValidationError(std::string(key) +
                              " must be an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  };

  for (const auto& [key, v] : j.items()) {
    if (key == "beta") {
      cfg.beta = need_num(v, "beta");
    } else if (key == "r0_det") {
      cfg.r0_det = need_num(v, "r0_det");
    } else if (key == "gamma") {
      cfg.gamma = need_num(v, "gamma");
      have_gamma = true;
    } else if (key == "mu") {
      cfg.mu = need_num(v, "mu");
      have_mu = true;
    } else if (key == "sigma") {
      cfg.sigma = need_num(v, "sigma");
    } else if (key == "c0") {
      cfg.c0 = need_num(v, "c0");
    } else if (key == "N") {
      cfg.n_total = need_num(v, "N");
      have_n = true;
    } else if (key == "dt") {
      cfg.dt = need_num(v, "dt");
    } else if (key == "horizon") {
      cfg.horizon = need_num(v, "horizon");
    } else if (key == "burn_in") {
      cfg.burn_in = need_num(v, "burn_in");
    } else if (key == "i0") {
      cfg.i0 = need_num(v, "i0");
    } else if (key == "seed") {
      cfg.seed = need_uint(v, "seed");
    } else if (key == "paths") {
      cfg.paths = need_uint(v, "paths");
    } else if (key == "n_cells") {
      cfg.n_cells = static_cast<std::size_t>(need_uint(v, "n_cells"));
    } else if (key == "bins") {
      cfg.bins = static_cast<std::size_t>(need_uint(v, "bins"));
    } else if (key == "tol") {
      cfg.tol = need_num(v, "tol");
    } else if (key == "max_time") {
      cfg.max_time = need_num(v, "max_time");
    } else if (key == "extinction_threshold") {
      cfg.extinction_threshold = need_num(v, "extinction_threshold");
    } else if (key == "eps") {
      cfg.eps = need_num(v, "eps");
    } else if (key == "levels") {
      cfg.levels = need_num_array(v, "levels");
    } else if (key == "sigmas") {
      cfg.sigmas = need_num_array(v, "sigmas");
    } else if (key == "quantities") {
      if (!v.is_array())
        throw ValidationError("quantities must be an array of strings");
      cfg.quantities.clear();
      for (const auto& e : v) {
        if (!e.is_string())
          throw ValidationError("quantities must be an array of strings");
        cfg.quantities.push_back(e.get<std::string>());
      }
    } else if (key == "scheme") {
      if (!v.is_string())
        throw ValidationError("scheme must be \"transformed\" or \"direct\"");
      const auto s = v.get<std::string>();
      if (s == "transformed")
        cfg.scheme = Scheme::TransformedTamedEuler;
      else if (s == "direct")
        cfg.scheme = Scheme::DirectEulerClamped;
      else
        throw ValidationError("scheme must be \"transformed\" or \"direct\"");
    } else {
      throw ValidationError("unknown config key: " + key);
    }
  }

  if (cfg.beta && cfg.r0_det)
    throw ValidationError("beta and r0_det are mutually exclusive");
  if (!cfg.beta && !cfg.r0_det)
    throw ValidationError("missing required field: beta (or r0_det)");
  if (cfg.sigma && cfg.c0)
    throw ValidationError("sigma and c0 are mutually exclusive");
  if (!cfg.sigma && !cfg.c0)
    throw ValidationError("missing required field: sigma (or c0)");
  if (!have_gamma) throw ValidationError("missing required field: gamma");
  if (!have_mu) throw ValidationError("missing required field: mu");
  if (!have_n) throw ValidationError("missing required field: N");

  if (cfg.beta && !(*cfg.beta > 0)) throw ValidationError("beta must be > 0");
  if (cfg.r0_det && !(*cfg.r0_det > 0))
    throw ValidationError("r0_det must be > 0");
  if (!(cfg.gamma > 0)) throw ValidationError("gamma must be > 0");
  if (!(cfg.mu > 0)) throw ValidationError("mu must be > 0");
  if (!(cfg.n_total > 0)) throw ValidationError("N must be > 0");
  if (cfg.sigma && !(*cfg.sigma >= 0))
    throw ValidationError("sigma must be >= 0");
  if (cfg.c0 && !(*cfg.c0 > 0)) throw ValidationError("c0 must be > 0");
  if (!(cfg.dt > 0)) throw ValidationError("dt must be > 0");
  if (!(cfg.horizon > 0)) throw ValidationError("horizon must be > 0");
  if (cfg.burn_in && !(*cfg.burn_in >= 0))
    throw ValidationError("burn_in must be >= 0");
  if (cfg.paths < 1) throw ValidationError("paths must be >= 1");
  if (cfg.n_cells < 1) throw ValidationError("n_cells must be >= 1");
  if (cfg.bins < 1) throw ValidationError("bins must be >= 1");
  if (!(cfg.tol > 0)) throw ValidationError("tol must be > 0");
  if (!(cfg.max_time > 0)) throw ValidationError("max_time must be > 0");
  if (!(cfg.eps > 0)) throw ValidationError("eps must be > 0");
  for (const double s : cfg.sigmas)
    if (!(s > 0)) throw ValidationError("sigmas entries must be > 0");
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot read config file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

// ------------------------------------------------------------ execution

namespace {

const std::set<std::string>& quantity_names() {
  static const std::set<std::string> names{
      "r0_det",       "r0_stoch",  "r0_pers",      "c0",
      "endemic_level", "norm_const", "mean",        "variance",
      "mode",         "i_minus",   "i_plus",       "i_star_sigma",
      "i_star",       "tilde_i_star", "prevalence_order", "tilde_order"};
  return names;
}

// Lazy per-point evaluator; quantities undefined at a point come out as nan
// rather than aborting a whole sweep.
struct QuantityEval {
  explicit QuantityEval(const ModelParams& p) : params(p) {}

  const ModelParams& params;
  bool density_tried = false;
  std::optional<DensityQuery> query;
  std::optional<DensityProfile> prof;
  bool compare_tried = false;
  std::optional<LevelComparison> cmp;

  const DensityProfile* profile() {
    if (!density_tried) {
      density_tried = true;
      try {
        query.emplace(params);
        prof = query->profile();
      } catch (const Error&) {
      }
    }
    return prof ? &*prof : nullptr;
  }

  const LevelComparison* comparison() {
    if (!compare_tried) {
      compare_tried = true;
      profile();
      if (query) {
        try {
          cmp = compare_levels(*query);
        } catch (const Error&) {
        }
      }
    }
    return cmp ? &*cmp : nullptr;
  }

  double value(const std::string& name) {
    const ThresholdReport rep = thresholds(params);
    if (name == "r0_det") return rep.r0_det;
    if (name == "r0_stoch") return rep.r0_stoch ? *rep.r0_stoch : kNan;
    if (name == "r0_pers") return rep.r0_pers ? *rep.r0_pers : kNan;
    if (name == "c0") return rep.c0 ? *rep.c0 : kNan;
    if (name == "endemic_level") {
      const auto lev = deterministic_levels(params).endemic_level;
      return lev ? *lev : kNan;
    }
    if (name == "norm_const" || name == "mean" || name == "variance" ||
        name == "mode" || name == "i_minus" || name == "i_plus") {
      const DensityProfile* pr = profile();
      if (!pr) return kNan;
      if (name == "norm_const") return pr->norm_const;
      if (name == "mean") return pr->mean;
      if (name == "variance") return pr->variance;
      if (name == "mode") return pr->mode_at_boundary ? kNan : pr->mode;
      if (name == "i_minus") return pr->i_minus ? *pr->i_minus : kNan;
      return pr->i_plus ? *pr->i_plus : kNan;
    }
    const LevelComparison* c = comparison();
    if (!c) return kNan;
    if (name == "i_star_sigma") return c->i_star_sigma;
    if (name == "i_star") return c->i_star;
    if (name == "tilde_i_star") return c->tilde_i_star;
    if (name == "prevalence_order") return order_num(c->prevalence_order);
    return order_num(c->tilde_order);
  }
};

RunConfig with_axis(RunConfig cfg, const std::string& name, double v) {
  if (name == "beta") {
    cfg.beta = v;
    cfg.r0_det.reset();
  } else if (name == "r0_det") {
    cfg.r0_det = v;
    cfg.beta.reset();
  } else if (name == "sigma") {
    cfg.sigma = v;
    cfg.c0.reset();
  } else if (name == "c0") {
    cfg.c0 = v;
    cfg.sigma.reset();
  } else if (name == "gamma") {
    cfg.gamma = v;
  } else if (name == "mu") {
    cfg.mu = v;
  } else {
    cfg.n_total = v;
  }
  return cfg;
}

std::string config_echo(const RunConfig& cfg) {
  JsonObj c;
  try {
    const ModelParams p = cfg.resolve_params();
    c.num("beta", p.beta);
    c.num("sigma", p.sigma);
  } catch (const Error&) {
    if (cfg.beta) c.num("beta", *cfg.beta);
    if (cfg.r0_det) c.num("r0_det", *cfg.r0_det);
    if (cfg.sigma) c.num("sigma", *cfg.sigma);
    if (cfg.c0) c.num("c0", *cfg.c0);
  }
  c.num("gamma", cfg.gamma);
  c.num("mu", cfg.mu);
  c.num("N", cfg.n_total);
  c.num("dt", cfg.dt);
  c.num("horizon", cfg.horizon);
  c.num("burn_in", cfg.resolve_burn_in());
  c.num("i0", cfg.resolve_i0());
  c.uint("seed", cfg.seed);
  c.uint("paths", cfg.paths);
  c.uint("n_cells", cfg.n_cells);
  c.uint("bins", cfg.bins);
  c.num("tol", cfg.tol);
  c.num("max_time", cfg.max_time);
  c.num("extinction_threshold", cfg.extinction_threshold);
  c.num("eps", cfg.eps);
  c.raw("levels", json_num_array(cfg.levels));
  c.raw("sigmas", json_num_array(cfg.sigmas));
  c.raw("quantities", json_str_array(cfg.quantities));
  c.str("scheme", scheme_name(cfg.scheme));
  return c.str();
}

void write_manifest(const CliOptions& opt, const RunConfig& cfg,
                    const OutputTracker& outs, const char* error_msg) {
  JsonObj m;
  m.str("tool_version", kToolVersion);
  m.str("timestamp", iso_now());
  m.str("command", opt.command_line);
  m.raw("config", config_echo(cfg));
  m.uint("master_seed", cfg.seed);
  m.str("status", error_msg ? "error" : "ok");
  if (error_msg) m.str("error", error_msg);
  std::string arr = "[";
  for (std::size_t i = 0; i < outs.names.size(); ++i) {
    if (i) arr += ", ";
    JsonObj entry;
    entry.str("path", outs.names[i]);
    entry.str("sha256", sha256_file(outs.full(outs.names[i])));
    arr += entry.str();
  }
  arr += "]";
  m.raw("outputs", arr);

  std::ofstream f(outs.dir + "/manifest.json", std::ios::binary);
  f << m.str() << "\n";
}

void usage_validate(const CliOptions& opt, const RunConfig& cfg) {
  const std::string& s = opt.subcommand;
  if (s == "sweep") {
    if (opt.sweep.empty() || opt.sweep.size() > 2)
      throw ValidationError("sweep requires one or two --sweep axes");
    if (opt.sweep.size() == 2 && opt.sweep[0].name == opt.sweep[1].name)
      throw ValidationError("duplicate sweep axes: " + opt.sweep[0].name);
    if (cfg.quantities.empty())
      throw ValidationError("quantities must not be empty");
    for (const auto& qn : cfg.quantities)
      if (!quantity_names().count(qn))
        throw ValidationError("unknown quantity: " + qn);
  } else if (s == "compare") {
    if (opt.sweep.size() > 1)
      throw ValidationError("compare takes at most one --sweep axis");
  } else if (s == "concentration") {
    if (opt.sweep.size() > 1 ||
        (opt.sweep.size() == 1 && opt.sweep[0].name != "sigma"))
      throw ValidationError("concentration accepts only --sweep sigma=...");
  } else if (!opt.sweep.empty()) {
    throw ValidationError("--sweep is not supported by " + s);
  }
}

void cmd_thresholds(const RunConfig& cfg, OutputTracker& outs) {
  const ThresholdReport r = thresholds(cfg.resolve_params());
  JsonObj j;
  j.num("r0_det", r.r0_det);
  if (r.r0_stoch) j.num("r0_stoch", *r.r0_stoch);
  if (r.r0_pers) j.num("r0_pers", *r.r0_pers);
  if (r.c0) j.num("c0", *r.c0);
  if (r.r0_stoch) {
    // Conditioning aid: the classification compares R0S against 1 exactly.
    j.num("r0_stoch_distance_to_one", std::abs(*r.r0_stoch - 1.0));
    j.str("asymptotic", asymptotic_name(classify_asymptotic(r)));
  }
  j.str("persistence", persistence_name(classify_persistence(r)));
  outs.write_text("thresholds.json", j.str() + "\n");
}

std::string profile_json(const DensityProfile& pr) {
  JsonObj j;
  j.num("norm_const", pr.norm_const);
  j.num("c0", pr.c0);
  j.str("limit_at_zero", limit_name(pr.limit_at_zero));
  if (std::isfinite(pr.limit_at_zero_value))
    j.num("limit_at_zero_value", pr.limit_at_zero_value);
  j.num("limit_at_n", pr.limit_at_n);
  std::string arr = "[";
  for (std::size_t i = 0; i < pr.monotone_intervals.size(); ++i) {
    if (i) arr += ", ";
    const auto& iv = pr.monotone_intervals[i];
    JsonObj e;
    e.num("left", iv.left);
    e.num("right", iv.right);
    e.str("direction",
          iv.dir == Direction::Increasing ? "Increasing" : "Decreasing");
    arr += e.str();
  }
  arr += "]";
  j.raw("monotone_intervals", arr);
  j.boolean("mode_at_boundary", pr.mode_at_boundary);
  if (!pr.mode_at_boundary) j.num("mode", pr.mode);
  if (pr.i_minus) j.num("i_minus", *pr.i_minus);
  if (pr.i_plus) j.num("i_plus", *pr.i_plus);
  j.num("mean", pr.mean);
  j.num("variance", pr.variance);
  j.str("case_label", pr.case_label);
  j.boolean("label_discrepancy", pr.label_discrepancy);
  return j.str();
}

void cmd_density(const RunConfig& cfg, OutputTracker& outs) {
  const ModelParams p = cfg.resolve_params();
  const DensityQuery q(p);
  std::FILE* f = outs.open("density.csv");
  std::fputs("x,p\n", f);
  const auto cells = static_cast<double>(cfg.n_cells);
  for (std::size_t i = 0; i < cfg.n_cells; ++i) {
    const double x = p.n_total * (static_cast<double>(i) + 0.5) / cells;
    std::fprintf(f, "%.17g,%.17g\n", x, q.density(x));
  }
  outs.finish(f, "density.csv");
  outs.write_text("profile.json", profile_json(q.profile()) + "\n");
}

void cmd_moments(const RunConfig& cfg, OutputTracker& outs) {
  const DensityQuery q(cfg.resolve_params());
  const Moments a = q.moments();
  const Moments n = q.quadrature_moments();
  const FluxResiduals fr = q.flux_residuals();
  JsonObj ja, jn, jf, j;
  ja.num("mean", a.mean);
  ja.num("variance", a.variance);
  jn.num("mean", n.mean);
  jn.num("variance", n.variance);
  jf.num("linear", fr.linear);
  jf.num("weighted", fr.weighted);
  j.raw("analytic", ja.str());
  j.raw("quadrature", jn.str());
  j.raw("flux_residuals", jf.str());
  outs.write_text("moments.json", j.str() + "\n");
}

void cmd_simulate(const RunConfig& cfg, OutputTracker& outs) {
  const ModelParams p = cfg.resolve_params();
  SimOptions o;
  o.scheme = cfg.scheme;
  o.dt = cfg.dt;
  o.horizon = cfg.horizon;
  o.i0 = cfg.resolve_i0();
  o.seed = cfg.seed;
  const Trajectory t = simulate_path(p, o);
  std::FILE* f = outs.open("trajectory.csv");
  std::fputs("t,i\n", f);
  for (std::size_t k = 0; k < t.times.size(); ++k)
    std::fprintf(f, "%.17g,%.17g\n", t.times[k], t.values[k]);
  outs.finish(f, "trajectory.csv");
}

void cmd_ensemble(const RunConfig& cfg, OutputTracker& outs) {
  const ModelParams p = cfg.resolve_params();
  EnsembleConfig e;
  e.n_paths = cfg.paths;
  e.horizon = cfg.horizon;
  e.burn_in = cfg.resolve_burn_in();
  e.dt = cfg.dt;
  e.i0 = cfg.resolve_i0();
  e.levels = cfg.levels;
  e.extinction_threshold = cfg.extinction_threshold;
  e.histogram_bins = cfg.bins;
  e.scheme = cfg.scheme;
  e.master_seed = cfg.seed;
  const EnsembleSummary s = run_ensemble(p, e);

  std::optional<DensityQuery> q;
  try {
    q.emplace(p);
  } catch (const Error&) {
  }

  std::FILE* f = outs.open("histogram.csv");
  std::fputs("bin_left,bin_right,mass,analytic_mass\n", f);
  for (std::size_t i = 0; i + 1 < s.occupation.edges.size(); ++i) {
    const double l = s.occupation.edges[i];
    const double r = s.occupation.edges[i + 1];
    const double analytic = q ? q->interval_mass(l, r) : kNan;
    std::fprintf(f, "%.17g,%.17g,%.17g,%.17g\n", l, r, s.occupation.mass[i],
                 analytic);
  }
  outs.finish(f, "histogram.csv");

  JsonObj j;
  j.uint("n_paths", s.n_paths);
  j.num("horizon", s.horizon);
  j.num("burn_in", s.burn_in);
  j.num("dt", s.dt);
  j.num("time_avg_mean", s.time_avg_mean);
  j.num("time_avg_second", s.time_avg_second);
  j.num("extinction_fraction", s.extinction_fraction);
  j.num("extinction_threshold", s.extinction_threshold);
  j.raw("levels", json_num_array(s.levels));
  j.raw("crossing_fraction", json_num_array(s.crossing_fraction));
  j.uint("master_seed", s.master_seed);
  j.uint("clamp_total", s.clamp_total);
  j.str("scheme", scheme_name(s.scheme));
  if (q) j.num("histogram_l1_vs_analytic", histogram_distance(s, *q));
  outs.write_text("ensemble.json", j.str() + "\n");
}

void cmd_fpe(const RunConfig& cfg, OutputTracker& outs) {
  const ModelParams p = cfg.resolve_params();
  const SteadyStateResult r =
      steady_state(p, cfg.n_cells, cfg.tol, cfg.max_time);

  std::optional<DensityQuery> q;
  try {
    q.emplace(p);
  } catch (const Error&) {
  }

  std::FILE* f = outs.open("fpe.csv");
  std::fputs("x_center,cell_mass,analytic_mass\n", f);
  const FpeState& st = r.state;
  for (std::size_t i = 0; i < st.n_cells(); ++i) {
    const double l = st.edges[i];
    const double rr = st.edges[i + 1];
    const double analytic = q ? q->interval_mass(l, rr) : kNan;
    std::fprintf(f, "%.17g,%.17g,%.17g\n", (l + rr) / 2, st.masses[i],
                 analytic);
  }
  outs.finish(f, "fpe.csv");

  JsonObj j;
  if (r.l1_vs_analytic) j.num("l1_vs_analytic", *r.l1_vs_analytic);
  j.num("boundary_mass", r.boundary_mass);
  j.uint("steps", r.steps);
  j.num("time", st.time);
  j.num("clip_total", st.clip_total);
  outs.write_text("fpe.json", j.str() + "\n");
}

void cmd_feller(const RunConfig& cfg, OutputTracker& outs) {
  const ScaleEvaluator ev(cfg.resolve_params());
  const BoundaryClassification b = ev.classify_boundaries();
  JsonObj j;
  j.num("linear_exponent_coeff", ev.linear_exponent_coeff());
  j.str("psi_minus_inf",
        b.psi_minus_inf == PsiLimit::Finite ? "Finite" : "Divergent");
  if (b.psi_minus_estimate) j.num("psi_minus_estimate", *b.psi_minus_estimate);
  j.str("psi_plus_inf", "Divergent");
  j.str("regime", b.regime == AsymptoticRegime::ExtinctAlmostSurely
                      ? "ExtinctAlmostSurely"
                      : "Recurrent");
  outs.write_text("feller.json", j.str() + "\n");
}

void cmd_compare(const CliOptions& opt, const RunConfig& cfg,
                 OutputTracker& outs) {
  if (opt.sweep.empty()) {
    const DensityQuery q(cfg.resolve_params());
    const LevelComparison c = compare_levels(q);
    JsonObj j;
    j.num("i_star_sigma", c.i_star_sigma);
    j.num("i_star", c.i_star);
    j.num("tilde_i_star", c.tilde_i_star);
    j.str("prevalence_order", order_name(c.prevalence_order));
    j.str("tilde_order", order_name(c.tilde_order));
    outs.write_text("compare.json", j.str() + "\n");
    return;
  }

  const SweepAxis& ax = opt.sweep[0];
  std::FILE* f = outs.open("compare.csv");
  std::fprintf(f,
               "%s,i_star_sigma,i_star,tilde_i_star,prevalence_order,"
               "tilde_order\n",
               ax.name.c_str());
  for (const double v : ax.values()) {
    double is = kNan, istar = kNan, tilde = kNan, po = kNan, to = kNan;
    try {
      const DensityQuery q(with_axis(cfg, ax.name, v).resolve_params());
      const LevelComparison c = compare_levels(q);
      is = c.i_star_sigma;
      istar = c.i_star;
      tilde = c.tilde_i_star;
      po = order_num(c.prevalence_order);
      to = order_num(c.tilde_order);
    } catch (const Error&) {
    }
    std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", v, is, istar,
                 tilde, po, to);
  }
  outs.finish(f, "compare.csv");
}

void cmd_sweep(const CliOptions& opt, const RunConfig& cfg,
               OutputTracker& outs) {
  std::FILE* f = outs.open("sweep.csv");
  std::fputs("axis1,axis2,quantity,value\n", f);
  const std::vector<double> a1 = opt.sweep[0].values();
  const bool two = opt.sweep.size() == 2;
  const std::vector<double> a2 = two ? opt.sweep[1].values()
                                     : std::vector<double>{0};
  for (const double v1 : a1) {
    for (const double v2 : a2) {
      RunConfig point = with_axis(cfg, opt.sweep[0].name, v1);
      if (two) point = with_axis(point, opt.sweep[1].name, v2);
      double value = kNan;
      std::optional<QuantityEval> ev;
      try {
        ev.emplace(point.resolve_params());
      } catch (const Error&) {
      }
      for (const auto& qn : cfg.quantities) {
        value = ev ? ev->value(qn) : kNan;
        if (two)
          std::fprintf(f, "%.17g,%.17g,%s,%.17g\n", v1, v2, qn.c_str(),
                       value);
        else
          std::fprintf(f, "%.17g,,%s,%.17g\n", v1, qn.c_str(), value);
      }
    }
  }
  outs.finish(f, "sweep.csv");
}

void cmd_concentration(const CliOptions& opt, const RunConfig& cfg,
                       OutputTracker& outs) {
  const std::vector<double> sigmas =
      opt.sweep.empty() ? cfg.sigmas : opt.sweep[0].values();
  const ModelParams base = cfg.resolve_params();
  std::FILE* f = outs.open("concentration.csv");
  std::fputs("sigma,mass\n", f);
  for (const double s : sigmas) {
    ModelParams p = base;
    p.sigma = s;
    std::fprintf(f, "%.17g,%.17g\n", s, concentration_mass(p, cfg.eps));
  }
  outs.finish(f, "concentration.csv");
}

void run_subcommand(const CliOptions& opt, const RunConfig& cfg,
                    OutputTracker& outs) {
  const std::string& s = opt.subcommand;
  if (s == "thresholds")
    cmd_thresholds(cfg, outs);
  else if (s == "density")
    cmd_density(cfg, outs);
  else if (s == "moments")
    cmd_moments(cfg, outs);
  else if (s == "simulate")
    cmd_simulate(cfg, outs);
  else if (s == "ensemble")
    cmd_ensemble(cfg, outs);
  else if (s == "fpe")
    cmd_fpe(cfg, outs);
  else if (s == "feller")
    cmd_feller(cfg, outs);
  else if (s == "compare")
    cmd_compare(opt, cfg, outs);
  else if (s == "sweep")
    cmd_sweep(opt, cfg, outs);
  else
    cmd_concentration(opt, cfg, outs);
}

}  // namespace

int execute(const CliOptions& opt, RunConfig cfg) {
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.paths) cfg.paths = *opt.paths;
  if (opt.horizon) cfg.horizon = *opt.horizon;
  if (opt.dt) cfg.dt = *opt.dt;
  if (opt.cells) cfg.n_cells = *opt.cells;

  usage_validate(opt, cfg);

  std::error_code ec;
  std::filesystem::create_directories(opt.out_dir, ec);
  if (ec) {
    std::fprintf(stderr, "error: cannot create output directory %s\n",
                 opt.out_dir.c_str());
    return 1;
  }

  OutputTracker outs{opt.out_dir, {}};
  try {
    run_subcommand(opt, cfg, outs);
  } catch (const std::exception& e) {
    outs.remove_all();
    write_manifest(opt, cfg, outs, e.what());
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  write_manifest(opt, cfg, outs, nullptr);
  return 0;
}

namespace {

constexpr const char* kUsage =
    "usage: sislab SUBCOMMAND --config PATH [--out DIR] [--seed U64]\n"
    "              [--paths N] [--horizon T] [--dt X] [--cells N]\n"
    "              [--sweep NAME=LO:HI:COUNT[:log]]\n"
    "subcommands: thresholds density moments simulate ensemble fpe feller\n"
    "             compare sweep concentration\n";

bool known_subcommand(const std::string& s) {
  static const std::set<std::string> subs{
      "thresholds", "density", "moments", "simulate",      "ensemble",
      "fpe",        "feller",  "compare", "sweep",         "concentration"};
  return subs.count(s) != 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  if (argc < 2) {
    std::fputs(kUsage, stderr);
    return 2;
  }
  const std::string sub = argv[1];
  if (sub == "-h" || sub == "--help") {
    std::fputs(kUsage, stdout);
    return 0;
  }
  if (!known_subcommand(sub)) {
    std::fprintf(stderr, "error: unknown subcommand '%s'\n%s", sub.c_str(),
                 kUsage);
    return 2;
  }

  CLI::App app{"stochastic SIS laboratory"};
  CliOptions opt;
  opt.subcommand = sub;
  std::vector<std::string> sweep_args;
  std::uint64_t seed = 0, paths = 0;
  double horizon = 0, dt = 0;
  std::size_t cells = 0;
  app.add_option("--config", opt.config_path, "JSON parameter file");
  app.add_option("--out", opt.out_dir, "output directory");
  auto* o_seed = app.add_option("--seed", seed, "master seed");
  auto* o_paths = app.add_option("--paths", paths, "ensemble size");
  auto* o_horizon = app.add_option("--horizon", horizon, "time horizon");
  auto* o_dt = app.add_option("--dt", dt, "time step");
  auto* o_cells = app.add_option("--cells", cells, "grid resolution");
  app.add_option("--sweep", sweep_args, "axis NAME=LO:HI:COUNT[:log]");

  try {
    app.parse(argc - 1, argv + 1);
  } catch (const CLI::CallForHelp&) {
    std::fputs(kUsage, stdout);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }

  if (opt.config_path.empty()) {
    std::fprintf(stderr, "error: --config is required\n");
    return 2;
  }
  if (o_seed->count()) opt.seed = seed;
  if (o_paths->count()) opt.paths = paths;
  if (o_horizon->count()) opt.horizon = horizon;
  if (o_dt->count()) opt.dt = dt;
  if (o_cells->count()) opt.cells = cells;

  std::string cmdline;
  for (int i = 0; i < argc; ++i) {
    if (i) cmdline += ' ';
    cmdline += argv[i];
  }
  opt.command_line = cmdline;

  RunConfig cfg;
  try {
    for (const auto& s : sweep_args) opt.sweep.push_back(parse_sweep_axis(s));
    cfg = parse_config_file(opt.config_path);
    return execute(opt, cfg);
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace sislab::cli

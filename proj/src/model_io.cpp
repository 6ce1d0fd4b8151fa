#include "sgl/model_io.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "sgl/errors.hpp"
#include "sgl/numerics.hpp"

namespace sgl {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(trim(item));
  return out;
}

struct Entry {
  std::string value;
  int line;
};

class Parser {
 public:
  Parser(const std::string& text, std::string source) : source_(std::move(source)) {
    std::istringstream is(text);
    std::string raw;
    int line = 0;
    while (std::getline(is, raw)) {
      ++line;
      if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
      raw = trim(raw);
      if (raw.empty()) continue;
      const auto eq = raw.find('=');
      if (eq == std::string::npos) fail(line, "expected key = value");
      const std::string key = trim(raw.substr(0, eq));
      static const char* kKeys[] = {"kind", "d", "weights", "init", "rows", "K", "alpha", "beta_bits"};
      if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys)) {
        fail(line, "unknown key '" + key + "'");
      }
      if (entries_.count(key)) fail(line, "duplicate key '" + key + "'");
      entries_[key] = {trim(raw.substr(eq + 1)), line};
    }
  }

  [[noreturn]] void fail(int line, const std::string& msg) const {
    throw InvalidInput(source_ + ":" + std::to_string(line) + ": " + msg);
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  int line_of(const std::string& key) const { return has(key) ? entries_.at(key).line : 0; }

  const Entry& require(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw InvalidInput(source_ + ": missing key '" + key + "'");
    return it->second;
  }

  double real(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const auto& e = entries_.at(key);
    try {
      return parse_real(e.value);
    } catch (const InvalidInput&) {
      fail(e.line, "'" + key + "' is not a real number");
    }
  }

  std::vector<double> list(const Entry& e, const std::string& text, std::size_t n,
                           const std::string& what) const {
    std::vector<double> out;
    for (const auto& item : split(text, ',')) {
      try {
        out.push_back(parse_real(item));
      } catch (const InvalidInput&) {
        fail(e.line, what + ": '" + item + "' is not a real number");
      }
    }
    if (out.size() != n) {
      fail(e.line, what + ": expected " + std::to_string(n) + " entries, got " + std::to_string(out.size()));
    }
    double s = 0.0;
    for (double p : out) {
      if (!(p > 0.0)) fail(e.line, what + ": entries must be positive");
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-9) fail(e.line, what + ": entries must sum to 1 (sum is " + format_real(s) + ")");
    return out;
  }

 private:
  std::string source_;
  std::map<std::string, Entry> entries_;
};

}  // namespace

GibbsModel parse_model(const std::string& text, const std::string& source) {
  Parser p(text, source);
  const auto& kind = p.require("kind");
  const auto& d_entry = p.require("d");
  int d = 0;
  try {
    std::size_t pos = 0;
    d = std::stoi(d_entry.value, &pos);
    if (pos != d_entry.value.size()) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    p.fail(d_entry.line, "'d' is not an integer");
  }
  if (d < 1 || d > kMaxDimension) p.fail(d_entry.line, "'d' must be in [1, 4]");
  const std::size_t n = std::size_t{1} << d;
  const double K = p.real("K", 1.0);
  const double beta = p.real("beta_bits", 0.0);

  try {
    if (kind.value == "bernoulli") {
      const auto& w = p.require("weights");
      auto weights = p.list(w, w.value, n, "weights");
      return GibbsModel::bernoulli(d, std::move(weights), K, p.real("alpha", 1.0), beta);
    }
    if (kind.value == "markov") {
      const auto& ie = p.require("init");
      const auto& re = p.require("rows");
      auto init = p.list(ie, ie.value, n, "init");
      auto rows = split(re.value, ';');
      if (rows.size() != n) p.fail(re.line, "rows: expected " + std::to_string(n) + " rows");
      Eigen::MatrixXd T(n, n);
      for (std::size_t a = 0; a < n; ++a) {
        auto r = p.list(re, rows[a], n, "row " + std::to_string(a));
        for (std::size_t b = 0; b < n; ++b) T(a, b) = r[b];
      }
      Eigen::VectorXd iv = Eigen::Map<Eigen::VectorXd>(init.data(), n);
      return GibbsModel::markov(d, iv, T, K, p.real("alpha", 1.0), beta);
    }
    if (kind.value == "homogeneous") {
      if (p.has("weights") || p.has("init") || p.has("rows")) {
        p.fail(kind.line, "homogeneous models take no base weights");
      }
      if (p.real("alpha", 0.0) != 0.0) p.fail(p.line_of("alpha"), "homogeneous models take alpha = 0");
      return GibbsModel::homogeneous(d, beta, K);
    }
  } catch (const InvalidInput& e) {
    const std::string msg = e.what();
    if (msg.rfind(source, 0) == 0) throw;
    throw InvalidInput(source + ": " + msg);
  }
  p.fail(kind.line, "unknown kind '" + kind.value + "'");
}

GibbsModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open model file " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse_model(os.str(), path.string());
}

}  // namespace sgl

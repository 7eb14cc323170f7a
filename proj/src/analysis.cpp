#include "telekinesis/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "telekinesis/errors.hpp"
#include "telekinesis/json_util.hpp"

namespace tk::stats {

std::string_view effect_name(Effect e) {
  switch (e) {
    case Effect::kA:
      return "concentration";
    case Effect::kB:
      return "strain";
    case Effect::kC:
      return "energy";
    case Effect::kAB:
      return "concentration:strain";
    case Effect::kAC:
      return "concentration:energy";
    case Effect::kBC:
      return "strain:energy";
    case Effect::kABC:
      return "concentration:strain:energy";
  }
  return "?";
}

int contrast_sign(Effect e, bool a, bool b, bool c) {
  const int sa = a ? 1 : -1;
  const int sb = b ? 1 : -1;
  const int sc = c ? 1 : -1;
  switch (e) {
    case Effect::kA:
      return sa;
    case Effect::kB:
      return sb;
    case Effect::kC:
      return sc;
    case Effect::kAB:
      return sa * sb;
    case Effect::kAC:
      return sa * sc;
    case Effect::kBC:
      return sb * sc;
    case Effect::kABC:
      return sa * sb * sc;
  }
  return 0;
}

std::size_t replicates(const ObservationTable& table) {
  if (table.empty()) throw ValidationError("observation table is empty");
  std::array<std::size_t, 8> counts{};
  for (const auto& o : table) ++counts[cell_index(o)];
  for (std::size_t i = 1; i < counts.size(); ++i)
    if (counts[i] != counts[0])
      throw ValidationError("unbalanced design: cell counts differ (" + std::to_string(counts[0]) + " vs " +
                            std::to_string(counts[i]) + ")");
  if (counts[0] == 0) throw ValidationError("every cell of the 2x2x2 design needs observations");
  return counts[0];
}

namespace {

std::array<double, 8> cell_means(std::span<const Observation> rows, std::span<const double> y, std::size_t r) {
  std::array<double, 8> sum{};
  for (std::size_t i = 0; i < rows.size(); ++i) sum[cell_index(rows[i])] += y[i];
  for (auto& s : sum) s /= static_cast<double>(r);
  return sum;
}

AnovaResult anova_on(const ObservationTable& table, std::span<const double> y) {
  const std::size_t r = replicates(table);
  if (r < 2) throw ValidationError("anova needs at least 2 replicates per cell");
  const std::size_t n = table.size();
  const auto m = cell_means(table, y, r);

  const double grand = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double ss_error = 0.0;
  double ss_total = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double res = y[i] - m[cell_index(table[i])];
    ss_error += res * res;
    ss_total += (y[i] - grand) * (y[i] - grand);
    scale = std::max(scale, std::abs(y[i]));
  }

  AnovaResult out;
  out.n = n;
  out.replicates = r;
  out.df_error = static_cast<int>(n) - 8;
  out.ss_error = ss_error;
  out.ss_total = ss_total;
  const double ms_error = ss_error / out.df_error;
  if (ss_error <= 1e-24 * static_cast<double>(n) * scale * scale)
    throw DegenerateDataError("F is undefined: the within-cell mean square is zero (all replicates identical)");

  for (Effect e : kAllEffects) {
    double contrast = 0.0;
    for (int cell = 0; cell < 8; ++cell)
      contrast += contrast_sign(e, (cell & 4) != 0, (cell & 2) != 0, (cell & 1) != 0) * m[cell];
    EffectResult er;
    er.effect = e;
    er.ss = static_cast<double>(r) * contrast * contrast / 8.0;
    er.df1 = 1;
    er.df2 = out.df_error;
    er.F = er.ss / ms_error;
    er.p = f_upper_tail(er.F, er.df1, er.df2);
    out.effects[static_cast<std::size_t>(e)] = er;
  }
  return out;
}

}  // namespace

AnovaResult anova3(const ObservationTable& table) {
  std::vector<double> y;
  y.reserve(table.size());
  for (const auto& o : table) y.push_back(o.response);
  return anova_on(table, y);
}

std::vector<double> average_ranks(std::span<const double> values, double rel_tol) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  double scale = 0.0;
  for (double v : values) scale = std::max(scale, std::abs(v));
  const double tol = rel_tol * scale;

  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] - values[order[i]] <= tol) ++j;
    // Positions i..j-1 hold ranks i+1..j.
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    i = j;
  }
  return ranks;
}

std::vector<double> align(const ObservationTable& table, Effect effect) {
  const std::size_t r = replicates(table);
  std::vector<double> y;
  y.reserve(table.size());
  for (const auto& o : table) y.push_back(o.response);
  const auto m = cell_means(table, y, r);

  // Marginal means from the (balanced) cell means.
  const double grand = std::accumulate(m.begin(), m.end(), 0.0) / 8.0;
  auto mean_where = [&](auto pred) {
    double s = 0.0;
    int k = 0;
    for (int cell = 0; cell < 8; ++cell)
      if (pred((cell & 4) != 0, (cell & 2) != 0, (cell & 1) != 0)) {
        s += m[cell];
        ++k;
      }
    return s / k;
  };
  auto effect_at = [&](bool a, bool b, bool c) {
    const double ma = mean_where([&](bool x, bool, bool) { return x == a; });
    const double mb = mean_where([&](bool, bool x, bool) { return x == b; });
    const double mc = mean_where([&](bool, bool, bool x) { return x == c; });
    const double mab = mean_where([&](bool x, bool w, bool) { return x == a && w == b; });
    const double mac = mean_where([&](bool x, bool, bool w) { return x == a && w == c; });
    const double mbc = mean_where([&](bool, bool x, bool w) { return x == b && w == c; });
    const double mabc = m[cell_index(a, b, c)];
    switch (effect) {
      case Effect::kA:
        return ma - grand;
      case Effect::kB:
        return mb - grand;
      case Effect::kC:
        return mc - grand;
      case Effect::kAB:
        return mab - ma - mb + grand;
      case Effect::kAC:
        return mac - ma - mc + grand;
      case Effect::kBC:
        return mbc - mb - mc + grand;
      case Effect::kABC:
        return mabc - mab - mac - mbc + ma + mb + mc - grand;
    }
    return 0.0;
  };

  std::array<double, 8> est{};
  for (int cell = 0; cell < 8; ++cell) est[cell] = effect_at((cell & 4) != 0, (cell & 2) != 0, (cell & 1) != 0);

  std::vector<double> aligned(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    const int cell = cell_index(table[i]);
    aligned[i] = (y[i] - m[cell]) + est[cell];
  }
  return aligned;
}

std::vector<double> align_rank(const ObservationTable& table, Effect effect) {
  const auto aligned = align(table, effect);
  return average_ranks(aligned);
}

AnovaResult art_anova(const ObservationTable& table) {
  AnovaResult out;
  bool first = true;
  for (Effect e : kAllEffects) {
    const auto ranks = align_rank(table, e);
    const AnovaResult on_ranks = anova_on(table, ranks);
    if (first) {
      out = on_ranks;
      first = false;
    }
    out.effects[static_cast<std::size_t>(e)] = on_ranks[e];
  }
  // Sums of squares of the last per-effect fit are not meaningful for the whole table.
  out.ss_error = std::numeric_limits<double>::quiet_NaN();
  out.ss_total = std::numeric_limits<double>::quiet_NaN();
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// Continued fraction for I_x(a, b), modified Lentz. Converges fast for x < (a+1)/(a+b+2).
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

// I_x(a, b) given both x and y = 1 - x, so callers can pass an accurate complement.
double ibeta_xy(double a, double b, double x, double y) {
  if (x <= 0.0) return 0.0;
  if (y <= 0.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log(y);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, y) / b;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::domain_error("incomplete_beta: a and b must be > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return ibeta_xy(a, b, x, 1.0 - x);
}

double f_upper_tail(double F, double df1, double df2) {
  if (!(df1 > 0.0) || !(df2 > 0.0)) throw std::domain_error("f_upper_tail: degrees of freedom must be > 0");
  if (std::isnan(F)) return std::numeric_limits<double>::quiet_NaN();
  if (F <= 0.0) return 1.0;
  if (std::isinf(F)) return 0.0;
  // P(X > F) = I_x(df2/2, df1/2) with x = df2 / (df2 + df1 F).
  const double denom = df2 + df1 * F;
  const double x = df2 / denom;
  const double y = df1 * F / denom;
  return std::clamp(ibeta_xy(0.5 * df2, 0.5 * df1, x, y), 0.0, 1.0);
}

// ---------------------------------------------------------------------------

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char ch) { return !std::isspace(ch); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(trim(cur));
  return out;
}

bool parse_level(const std::string& raw, const char* column, std::size_t line) {
  std::string v = raw;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (v == "yes" || v == "true" || v == "1") return true;
  if (v == "no" || v == "false" || v == "0") return false;
  throw ParseError(std::string("column '") + column + "' must be yes or no, got '" + raw + "'", line);
}

}  // namespace

ObservationTable read_observations(std::istream& in) {
  static const std::vector<std::string> kHeader{"participant", "concentration", "strain", "energy", "response"};
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  ObservationTable table;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split_csv(line);
    if (!header_seen) {
      if (fields != kHeader)
        throw ParseError("header must be participant,concentration,strain,energy,response", lineno);
      header_seen = true;
      continue;
    }
    if (fields.size() != kHeader.size())
      throw ParseError("expected 5 fields, got " + std::to_string(fields.size()), lineno);
    Observation o;
    o.participant = fields[0];
    if (o.participant.empty()) throw ParseError("participant must not be empty", lineno);
    o.a = parse_level(fields[1], "concentration", lineno);
    o.b = parse_level(fields[2], "strain", lineno);
    o.c = parse_level(fields[3], "energy", lineno);
    std::size_t used = 0;
    try {
      o.response = std::stod(fields[4], &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != fields[4].size() || !std::isfinite(o.response))
      throw ParseError("response must be a finite number, got '" + fields[4] + "'", lineno);
    table.push_back(std::move(o));
  }
  if (!header_seen) throw ParseError("missing header", std::max<std::size_t>(lineno, 1));
  return table;
}

ObservationTable load_observations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open observations file " + path.string());
  return read_observations(in);
}

void write_observations(std::ostream& out, const ObservationTable& table) {
  out << "participant,concentration,strain,energy,response\n";
  auto yn = [](bool b) { return b ? "yes" : "no"; };
  for (const auto& o : table) {
    out << o.participant << ',' << yn(o.a) << ',' << yn(o.b) << ',' << yn(o.c) << ','
        << nlohmann::json(canonical(o.response)).dump() << '\n';
  }
}

nlohmann::ordered_json to_json(const AnovaResult& r, std::string_view method) {
  nlohmann::ordered_json effects = nlohmann::ordered_json::array();
  for (const auto& e : r.effects) {
    effects.push_back({{"effect", effect_name(e.effect)},
                       {"df1", e.df1},
                       {"df2", e.df2},
                       {"F", jsonu::num(e.F)},
                       {"p", jsonu::num(e.p)}});
  }
  return {
      {"version", 1},
      {"method", method},
      {"n", r.n},
      {"replicates", r.replicates},
      {"model", "fixed-effects 2x2x2, error term = within-cell variation"},
      {"effects", effects},
  };
}

}  // namespace tk::stats

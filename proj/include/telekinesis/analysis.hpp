#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace tk::stats {

// Factorial terms of a 2x2x2 design. A = concentration, B = strain, C = energy.
enum class Effect { kA = 0, kB, kC, kAB, kAC, kBC, kABC };

inline constexpr std::array<Effect, 7> kAllEffects = {Effect::kA,  Effect::kB,  Effect::kC,  Effect::kAB,
                                                      Effect::kAC, Effect::kBC, Effect::kABC};

std::string_view effect_name(Effect e);  // "concentration", "concentration:strain", ...

// +1/-1 contrast coefficient of an effect for a cell (levels coded yes=+1, no=-1).
int contrast_sign(Effect e, bool a, bool b, bool c);

struct Observation {
  std::string participant;
  bool a = false;
  bool b = false;
  bool c = false;
  double response = 0.0;

  friend bool operator==(const Observation&, const Observation&) = default;
};

using ObservationTable = std::vector<Observation>;

inline int cell_index(bool a, bool b, bool c) { return (int(a) << 2) | (int(b) << 1) | int(c); }
inline int cell_index(const Observation& o) { return cell_index(o.a, o.b, o.c); }

// Replicates per cell; throws ValidationError if the table is empty or unbalanced.
std::size_t replicates(const ObservationTable& table);

struct EffectResult {
  Effect effect = Effect::kA;
  double ss = 0.0;
  int df1 = 1;
  int df2 = 0;
  double F = 0.0;
  double p = 1.0;
};

struct AnovaResult {
  std::array<EffectResult, 7> effects{};
  double ss_error = 0.0;
  double ss_total = 0.0;
  int df_error = 0;
  std::size_t n = 0;
  std::size_t replicates = 0;

  const EffectResult& operator[](Effect e) const { return effects[static_cast<std::size_t>(e)]; }
};

// Fixed-effects three-way ANOVA on a balanced table with >= 2 replicates per
// cell. Throws DegenerateDataError when the within-cell variance is zero.
AnovaResult anova3(const ObservationTable& table);

// Average ranks (1-based), ties share the mean of the ranks they span. Values
// closer than `rel_tol` times the largest magnitude count as tied.
std::vector<double> average_ranks(std::span<const double> values, double rel_tol = 1e-9);

// Aligned response for `effect`: residual from the cell mean plus the estimated
// effect, so every other factorial term is stripped out. Row order preserved.
std::vector<double> align(const ObservationTable& table, Effect effect);

// Aligned responses ranked over the whole table.
std::vector<double> align_rank(const ObservationTable& table, Effect effect);

// Aligned rank transform: for each effect, align, rank, run anova3 on the
// ranks and keep that effect's row.
AnovaResult art_anova(const ObservationTable& table);

// Regularised incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

// P(X > F) for X ~ F(df1, df2).
double f_upper_tail(double F, double df1, double df2);

// CSV with header participant,concentration,strain,energy,response. Levels
// are yes/no (also accepted: true/false, 1/0). Throws ParseError with the line.
ObservationTable read_observations(std::istream& in);
ObservationTable load_observations(const std::filesystem::path& path);
void write_observations(std::ostream& out, const ObservationTable& table);

nlohmann::ordered_json to_json(const AnovaResult& r, std::string_view method);

}  // namespace tk::stats

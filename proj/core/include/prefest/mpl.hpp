#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "prefest/errors.hpp"

namespace prefest {

constexpr double kOneWeekYears = 7.0 / 365.0;

/// A dated, probabilistic monetary payoff. Amounts are in baseline
/// EUR-equivalents and may be negative; time is in years from the decision
/// date.
struct Outcome {
    double amount = 0.0;
    double probability = 1.0;
    double time = 0.0;
};

struct Option {
    std::vector<Outcome> outcomes;
};

struct MplRow {
    int index = 0;  // 1-based line number
    Option option_a;
    Option option_b;
};

enum class ListId { MPL1_1, MPL1_2, MPL2, MPL3 };
enum class ListKind { Time, Risk, Loss };

std::string to_string(ListId id);
std::optional<ListId> parse_list_id(const std::string& s);
ListKind kind_of(ListId id);

struct PriceList {
    ListId id = ListId::MPL1_1;
    ListKind kind = ListKind::Time;
    std::vector<MplRow> rows;
    double frontend_delay = kOneWeekYears;
};

enum class StakeLevel { Low, Baseline, High };

double stake_factor(StakeLevel s);

/// The four standard lists, with every amount scaled by stake factor times
/// currency multiplier. ab_reversed is presentation metadata only; option
/// identities are never permuted.
std::vector<PriceList> build_standard_lists(StakeLevel stake = StakeLevel::Baseline,
                                            double currency_multiplier = 1.0,
                                            bool ab_reversed = false);

const PriceList& standard_list(ListId id);

/// Yearly discount rate that makes a sure earlier payment indifferent to a
/// sure later one under linear utility: (later/earlier)^(1/gap) - 1.
double implied_discount_rate(double earlier_amount, double later_amount, double gap_years);

/// CRRA coefficient at which the two 50/50 gain lotteries of a row have equal
/// expected utility. Bracketing root search over [-10, 5].
double implied_crra(const MplRow& row);

/// Loss aversion at which a row's two 50/50 mixed lotteries are indifferent
/// under linear utility: (gB - gA) / (lB - lA) with losses in absolute value.
double implied_loss_aversion(const MplRow& row);

enum class ChoiceAB : char { A = 'A', B = 'B' };

struct ChoiceMeasures {
    int n_option_a = 0;
    std::optional<int> switch_point;  // leading A count; 0 = all B, n = all A
    bool multiple_switcher = false;
};

ChoiceMeasures choice_measures(const std::vector<ChoiceAB>& choices, int expected_rows);

/// A-count in MPL1.2 minus A-count in MPL1.1.
int present_bias_diff(const std::vector<ChoiceAB>& mpl11, const std::vector<ChoiceAB>& mpl12);

void export_lists_csv(const std::vector<PriceList>& lists, std::ostream& out);
std::vector<PriceList> import_lists_csv(std::istream& in);

}  // namespace prefest

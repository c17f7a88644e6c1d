#include "prefest/mpl.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace prefest {

std::string to_string(ListId id) {
    switch (id) {
        case ListId::MPL1_1: return "MPL1_1";
        case ListId::MPL1_2: return "MPL1_2";
        case ListId::MPL2: return "MPL2";
        case ListId::MPL3: return "MPL3";
    }
    return "?";
}

std::optional<ListId> parse_list_id(const std::string& s) {
    if (s == "MPL1_1" || s == "MPL1.1") return ListId::MPL1_1;
    if (s == "MPL1_2" || s == "MPL1.2") return ListId::MPL1_2;
    if (s == "MPL2") return ListId::MPL2;
    if (s == "MPL3") return ListId::MPL3;
    return std::nullopt;
}

ListKind kind_of(ListId id) {
    switch (id) {
        case ListId::MPL1_1:
        case ListId::MPL1_2: return ListKind::Time;
        case ListId::MPL2: return ListKind::Risk;
        case ListId::MPL3: return ListKind::Loss;
    }
    return ListKind::Time;
}

double stake_factor(StakeLevel s) {
    switch (s) {
        case StakeLevel::Low: return 0.1;
        case StakeLevel::Baseline: return 1.0;
        case StakeLevel::High: return 10.0;
    }
    return 1.0;
}

namespace {

Option sure(double amount, double t) { return Option{{Outcome{amount, 1.0, t}}}; }

Option coin(double heads, double tails) {
    return Option{{Outcome{heads, 0.5, 0.0}, Outcome{tails, 0.5, 0.0}}};
}

PriceList make_time_list(ListId id, double early_t, double late_t, double scale) {
    static const double early_amounts[] = {98, 94, 90, 86, 80, 70, 55};
    PriceList list;
    list.id = id;
    list.kind = ListKind::Time;
    for (int i = 0; i < 7; ++i) {
        list.rows.push_back(MplRow{i + 1, sure(early_amounts[i] * scale, early_t),
                                   sure(100.0 * scale, late_t)});
    }
    return list;
}

PriceList make_risk_list(double scale) {
    static const double b_heads[] = {54, 58, 62, 66, 70, 74, 78, 82, 87, 97, 112, 132, 167, 222};
    PriceList list;
    list.id = ListId::MPL2;
    list.kind = ListKind::Risk;
    for (int i = 0; i < 14; ++i) {
        list.rows.push_back(
            MplRow{i + 1, coin(50 * scale, 40 * scale), coin(b_heads[i] * scale, 10 * scale)});
    }
    return list;
}

PriceList make_loss_list(double scale) {
    // {a_gain, a_loss, b_gain, b_loss}
    static const double rows[][4] = {
        {100, -20, 150, -100}, {55, -20, 150, -100}, {15, -20, 150, -100}, {5, -20, 150, -90},
        {5, -30, 150, -90},    {5, -40, 150, -90},   {5, -40, 150, -70},
    };
    PriceList list;
    list.id = ListId::MPL3;
    list.kind = ListKind::Loss;
    for (int i = 0; i < 7; ++i) {
        list.rows.push_back(MplRow{i + 1, coin(rows[i][0] * scale, rows[i][1] * scale),
                                   coin(rows[i][2] * scale, rows[i][3] * scale)});
    }
    return list;
}

}  // namespace

std::vector<PriceList> build_standard_lists(StakeLevel stake, double currency_multiplier,
                                            bool ab_reversed) {
    (void)ab_reversed;  // presentation metadata only, consumed as a covariate
    if (currency_multiplier <= 0.0) throw Error("currency_multiplier must be positive");
    const double scale = stake_factor(stake) * currency_multiplier;
    const double week = kOneWeekYears;
    return {
        make_time_list(ListId::MPL1_1, 0.5 + week, 1.0, scale),
        make_time_list(ListId::MPL1_2, week, 0.5, scale),
        make_risk_list(scale),
        make_loss_list(scale),
    };
}

const PriceList& standard_list(ListId id) {
    static const std::vector<PriceList> lists = build_standard_lists();
    for (const auto& l : lists)
        if (l.id == id) return l;
    throw Error("unknown list id");
}

double implied_discount_rate(double earlier_amount, double later_amount, double gap_years) {
    if (earlier_amount <= 0.0 || later_amount <= 0.0 || gap_years <= 0.0)
        throw Error("implied_discount_rate requires positive amounts and gap");
    return std::pow(later_amount / earlier_amount, 1.0 / gap_years) - 1.0;
}

namespace {

// EU difference under CRRA gains utility, expressed through
// (x^(1-a) - 1)/(1-a) so the function is smooth through a = 1 (the additive
// constant cancels between two 50/50 options).
double crra_eu_gap(const MplRow& row, double a) {
    auto u = [a](double x) {
        if (std::abs(1.0 - a) < 1e-9) return std::log(x);
        return std::expm1((1.0 - a) * std::log(x)) / (1.0 - a);
    };
    double eu_a = 0.0, eu_b = 0.0;
    for (const auto& o : row.option_a.outcomes) eu_a += o.probability * u(o.amount);
    for (const auto& o : row.option_b.outcomes) eu_b += o.probability * u(o.amount);
    return eu_a - eu_b;
}

}  // namespace

double implied_crra(const MplRow& row) {
    for (const auto* opt : {&row.option_a, &row.option_b})
        for (const auto& o : opt->outcomes)
            if (o.amount <= 0.0 || o.time != 0.0)
                throw Error("implied_crra requires atemporal positive-outcome lotteries");

    // Bracket scan over [-10, 5], then bisection and one Newton polish.
    const double lo_lim = -10.0, hi_lim = 5.0;
    const int n_scan = 600;
    double prev_x = lo_lim, prev_f = crra_eu_gap(row, lo_lim);
    double lo = 0.0, hi = 0.0;
    bool found = false;
    for (int i = 1; i <= n_scan; ++i) {
        double x = lo_lim + (hi_lim - lo_lim) * i / n_scan;
        double f = crra_eu_gap(row, x);
        if (prev_f == 0.0 || (prev_f < 0.0) != (f < 0.0)) {
            lo = prev_x;
            hi = x;
            found = true;
            break;
        }
        prev_x = x;
        prev_f = f;
    }
    if (!found) throw NoIndifferencePoint("no sign change of the EU gap in [-10, 5]");

    double flo = crra_eu_gap(row, lo);
    for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
        double mid = 0.5 * (lo + hi);
        double fm = crra_eu_gap(row, mid);
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    double root = 0.5 * (lo + hi);
    double h = 1e-7;
    double deriv = (crra_eu_gap(row, root + h) - crra_eu_gap(row, root - h)) / (2 * h);
    if (std::abs(deriv) > 1e-14) root -= crra_eu_gap(row, root) / deriv;
    return root;
}

double implied_loss_aversion(const MplRow& row) {
    auto split = [](const Option& o) {
        if (o.outcomes.size() != 2) throw Error("expected a 50/50 mixed lottery");
        double gain = 0.0, loss = 0.0;
        for (const auto& out : o.outcomes) {
            if (out.probability != 0.5) throw Error("expected a 50/50 mixed lottery");
            if (out.amount >= 0.0)
                gain = out.amount;
            else
                loss = -out.amount;
        }
        return std::pair{gain, loss};
    };
    auto [ga, la] = split(row.option_a);
    auto [gb, lb] = split(row.option_b);
    if (lb == la) throw DegenerateRow("equal losses leave lambda unidentified");
    return (gb - ga) / (lb - la);
}

ChoiceMeasures choice_measures(const std::vector<ChoiceAB>& choices, int expected_rows) {
    if (static_cast<int>(choices.size()) != expected_rows)
        throw IncompleteProfile("expected " + std::to_string(expected_rows) + " choices, got " +
                                std::to_string(choices.size()));
    ChoiceMeasures m;
    int transitions = 0;
    bool any_b_to_a = false;
    for (size_t i = 0; i < choices.size(); ++i) {
        if (choices[i] == ChoiceAB::A) ++m.n_option_a;
        if (i > 0 && choices[i] != choices[i - 1]) {
            ++transitions;
            if (choices[i] == ChoiceAB::A) any_b_to_a = true;
        }
    }
    m.multiple_switcher = transitions > 1 || any_b_to_a;
    if (!m.multiple_switcher) m.switch_point = m.n_option_a;
    return m;
}

int present_bias_diff(const std::vector<ChoiceAB>& mpl11, const std::vector<ChoiceAB>& mpl12) {
    auto count_a = [](const std::vector<ChoiceAB>& c) {
        return static_cast<int>(std::count(c.begin(), c.end(), ChoiceAB::A));
    };
    return count_a(mpl12) - count_a(mpl11);
}

void export_lists_csv(const std::vector<PriceList>& lists, std::ostream& out) {
    out << "list_id,row,option,outcome_index,amount,probability,time_years\n";
    for (const auto& list : lists) {
        for (const auto& row : list.rows) {
            auto dump = [&](const Option& o, char tag) {
                for (size_t k = 0; k < o.outcomes.size(); ++k) {
                    const auto& oc = o.outcomes[k];
                    out << to_string(list.id) << ',' << row.index << ',' << tag << ',' << k << ','
                        << oc.amount << ',' << oc.probability << ',' << oc.time << '\n';
                }
            };
            dump(row.option_a, 'A');
            dump(row.option_b, 'B');
        }
    }
}

std::vector<PriceList> import_lists_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty price list CSV");

    std::map<ListId, std::map<int, MplRow>> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 7)
            throw ParseError("line " + std::to_string(lineno) + ": expected 7 fields");
        auto id = parse_list_id(fields[0]);
        if (!id) throw ParseError("line " + std::to_string(lineno) + ": unknown list id");
        int rowidx = std::stoi(fields[1]);
        Outcome oc{std::stod(fields[4]), std::stod(fields[5]), std::stod(fields[6])};
        MplRow& r = rows[*id][rowidx];
        r.index = rowidx;
        (fields[2] == "A" ? r.option_a : r.option_b).outcomes.push_back(oc);
    }
    std::vector<PriceList> lists;
    for (auto& [id, rmap] : rows) {
        PriceList list;
        list.id = id;
        list.kind = kind_of(id);
        for (auto& [idx, row] : rmap) list.rows.push_back(std::move(row));
        lists.push_back(std::move(list));
    }
    return lists;
}

}  // namespace prefest

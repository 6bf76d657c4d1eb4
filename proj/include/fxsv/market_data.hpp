#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fxsv {

using Date = std::chrono::year_month_day;

Date parse_date(std::string_view text);
std::string format_date(const Date& date);

enum class Tenor { M1, M2, M3, M6, Y1, Y2 };

inline constexpr std::array<Tenor, 6> all_tenors{Tenor::M1, Tenor::M2, Tenor::M3,
                                                  Tenor::M6, Tenor::Y1, Tenor::Y2};

std::string_view tenor_label(Tenor tenor);
std::optional<Tenor> parse_tenor(std::string_view label);
int tenor_months(Tenor tenor);

// ACT/365 fixed year fraction from the trade date to the tenor's calendar expiry
// (month-end clamped).
double year_fraction(const Date& trade_date, Tenor tenor);

enum class Pillar { P10, P25, ATM, C25, C10 };

inline constexpr std::array<Pillar, 5> all_pillars{Pillar::P10, Pillar::P25, Pillar::ATM,
                                                   Pillar::C25, Pillar::C10};

std::string_view pillar_label(Pillar pillar);
double pillar_delta(Pillar pillar);
bool pillar_is_call(Pillar pillar);

struct QuoteRow {
    Date date{};
    Tenor tenor = Tenor::M1;
    double tau = 0.0;
    double spot = 0.0;
    double ois = 0.0;
    double fwd_points = 0.0;
    std::optional<double> forward;  // explicit outright forward overrides fwd_points
    double atm = 0.0;
    double rr25 = 0.0;
    double fly25 = 0.0;
    double rr10 = 0.0;
    double fly10 = 0.0;
};

struct SmileNodes {
    std::array<double, 5> vols{};

    double vol(Pillar pillar) const { return vols[static_cast<std::size_t>(pillar)]; }
};

struct RatePoint {
    double r_d = 0.0;
    double r_f = 0.0;
    double forward = 0.0;
};

struct TenorSlice {
    Tenor tenor = Tenor::M1;
    double tau = 0.0;
    RatePoint rates;
    SmileNodes smile;
    std::array<double, 5> strikes{};

    double strike(Pillar pillar) const { return strikes[static_cast<std::size_t>(pillar)]; }
};

struct VolSurface {
    Date date{};
    double spot = 0.0;
    std::vector<TenorSlice> slices;  // ordered by tenor

    std::size_t cell_count() const { return slices.size() * all_pillars.size(); }
    const TenorSlice* find(Tenor tenor) const;
};

SmileNodes smile_from_strategies(double atm, double rr25, double fly25, double rr10, double fly10);

RatePoint rates_from_quotes(double ois, double fwd_points, double spot, double tau);
RatePoint rates_from_forward(double ois, double forward, double spot, double tau);

double strike_from_delta(double spot, double r_d, double r_f, double tau, double sigma,
                         double delta);

struct IngestOptions {
    bool vols_decimal = false;
};

struct IngestResult {
    std::vector<QuoteRow> rows;
    std::vector<std::string> warnings;
};

IngestResult parse_quotes(std::istream& in, const IngestOptions& options = {});
IngestResult ingest_csv(const std::string& path, const IngestOptions& options = {});

// Builds one slice per row; every row must share the same date and spot.
VolSurface build_surface(const std::vector<QuoteRow>& rows);
TenorSlice build_slice(const QuoteRow& row);

// Groups rows by date (ascending) and rejects duplicate (date, tenor) pairs.
std::vector<VolSurface> build_surfaces(const std::vector<QuoteRow>& rows);

// Inverse of smile_from_strategies for a whole surface, used to emit quote rows.
std::vector<QuoteRow> surface_to_quotes(const VolSurface& surface);

}  // namespace fxsv

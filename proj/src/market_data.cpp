#include "fxsv/market_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>

#include "fxsv/errors.hpp"
#include "fxsv/normal.hpp"

namespace fxsv {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

std::optional<double> to_double(std::string_view s) {
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

std::optional<int> to_int(std::string_view s) {
    int value = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

}  // namespace

// ============================================================================
// Calendar
// ============================================================================

Date parse_date(std::string_view text) {
    text = trim(text);
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        raise(ErrorCode::InvalidArgument, "expected YYYY-MM-DD date, got '" + std::string(text) + "'");
    }
    const auto y = to_int(text.substr(0, 4));
    const auto m = to_int(text.substr(5, 2));
    const auto d = to_int(text.substr(8, 2));
    if (!y || !m || !d) {
        raise(ErrorCode::InvalidArgument, "malformed date '" + std::string(text) + "'");
    }
    const Date date{std::chrono::year{*y}, std::chrono::month{static_cast<unsigned>(*m)},
                    std::chrono::day{static_cast<unsigned>(*d)}};
    if (!date.ok()) raise(ErrorCode::InvalidArgument, "invalid calendar date '" + std::string(text) + "'");
    return date;
}

std::string format_date(const Date& date) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                  static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
    return buf;
}

std::string_view tenor_label(Tenor tenor) {
    switch (tenor) {
        case Tenor::M1: return "1M";
        case Tenor::M2: return "2M";
        case Tenor::M3: return "3M";
        case Tenor::M6: return "6M";
        case Tenor::Y1: return "1Y";
        case Tenor::Y2: return "2Y";
    }
    return "?";
}

std::optional<Tenor> parse_tenor(std::string_view label) {
    label = trim(label);
    for (const Tenor t : all_tenors) {
        if (tenor_label(t) == label) return t;
    }
    return std::nullopt;
}

int tenor_months(Tenor tenor) {
    switch (tenor) {
        case Tenor::M1: return 1;
        case Tenor::M2: return 2;
        case Tenor::M3: return 3;
        case Tenor::M6: return 6;
        case Tenor::Y1: return 12;
        case Tenor::Y2: return 24;
    }
    return 0;
}

double year_fraction(const Date& trade_date, Tenor tenor) {
    Date expiry = trade_date + std::chrono::months{tenor_months(tenor)};
    if (!expiry.ok()) {
        expiry = std::chrono::year_month_day_last{expiry.year(),
                                                  std::chrono::month_day_last{expiry.month()}};
    }
    const auto days = (std::chrono::sys_days{expiry} - std::chrono::sys_days{trade_date}).count();
    return static_cast<double>(days) / 365.0;
}

// ============================================================================
// Pillars and smiles
// ============================================================================

std::string_view pillar_label(Pillar pillar) {
    switch (pillar) {
        case Pillar::P10: return "10P";
        case Pillar::P25: return "25P";
        case Pillar::ATM: return "ATM";
        case Pillar::C25: return "25C";
        case Pillar::C10: return "10C";
    }
    return "?";
}

double pillar_delta(Pillar pillar) {
    switch (pillar) {
        case Pillar::P10: return -0.10;
        case Pillar::P25: return -0.25;
        case Pillar::ATM: return 0.50;
        case Pillar::C25: return 0.25;
        case Pillar::C10: return 0.10;
    }
    return 0.0;
}

bool pillar_is_call(Pillar pillar) { return pillar_delta(pillar) > 0.0; }

const TenorSlice* VolSurface::find(Tenor tenor) const {
    for (const auto& s : slices) {
        if (s.tenor == tenor) return &s;
    }
    return nullptr;
}

SmileNodes smile_from_strategies(double atm, double rr25, double fly25, double rr10,
                                 double fly10) {
    for (const double v : {atm, rr25, fly25, rr10, fly10}) {
        if (!std::isfinite(v)) raise(ErrorCode::InvalidArgument, "non-finite strategy quote");
    }
    if (!(atm > 0.0)) raise(ErrorCode::NonPositivePillarVol, "atm quote must be positive");
    SmileNodes nodes;
    nodes.vols = {atm + fly10 - 0.5 * rr10, atm + fly25 - 0.5 * rr25, atm,
                  atm + fly25 + 0.5 * rr25, atm + fly10 + 0.5 * rr10};
    for (const Pillar p : all_pillars) {
        if (!(nodes.vol(p) > 0.0)) {
            raise(ErrorCode::NonPositivePillarVol,
                  "pillar " + std::string(pillar_label(p)) + " vol is not positive");
        }
    }
    return nodes;
}

RatePoint rates_from_forward(double ois, double forward, double spot, double tau) {
    if (!(spot > 0.0)) raise(ErrorCode::InvalidArgument, "spot must be positive");
    if (!(tau > 0.0)) raise(ErrorCode::InvalidArgument, "tau must be positive");
    if (!(1.0 + ois * tau > 0.0)) raise(ErrorCode::InvalidArgument, "1 + ois*tau must be positive");
    if (!(forward > 0.0)) raise(ErrorCode::InvalidForward, "forward is not positive");
    RatePoint r;
    r.r_f = std::log1p(ois * tau) / tau;
    r.r_d = r.r_f + std::log(forward / spot) / tau;
    r.forward = forward;
    return r;
}

RatePoint rates_from_quotes(double ois, double fwd_points, double spot, double tau) {
    return rates_from_forward(ois, spot + fwd_points, spot, tau);
}

double strike_from_delta(double spot, double r_d, double r_f, double tau, double sigma,
                         double delta) {
    if (!(sigma > 0.0) || !(tau > 0.0) || !(spot > 0.0)) {
        raise(ErrorCode::InvalidArgument, "strike_from_delta needs positive spot, sigma, tau");
    }
    const double arg = std::abs(delta) * std::exp(r_f * tau);
    if (!(arg > 0.0 && arg < 1.0)) {
        raise(ErrorCode::DeltaOutOfRange, "|delta| * exp(r_f tau) outside (0, 1)");
    }
    const double sgn = delta >= 0.0 ? 1.0 : -1.0;
    const double sq = sigma * std::sqrt(tau);
    return spot * std::exp((r_d - r_f) * tau) *
           std::exp(0.5 * sigma * sigma * tau - sgn * sq * norm_inv(arg));
}

// ============================================================================
// CSV ingest
// ============================================================================

IngestResult parse_quotes(std::istream& in, const IngestOptions& options) {
    IngestResult result;
    std::string line;
    std::size_t row = 0;
    std::map<std::string, std::size_t> column;
    bool have_header = false;

    static const std::vector<std::string> required = {"date", "tenor", "spot", "ois", "atm",
                                                      "rr25", "fly25", "rr10", "fly10"};

    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto cells = split(line, ',');
        if (!have_header) {
            for (std::size_t i = 0; i < cells.size(); ++i) column[std::string(cells[i])] = i;
            for (const auto& name : required) {
                if (!column.count(name)) throw ParseError(row, 0, "missing column '" + name + "'");
            }
            if (!column.count("fwd_points") && !column.count("forward")) {
                throw ParseError(row, 0, "missing column 'fwd_points' (or 'forward')");
            }
            have_header = true;
            continue;
        }
        if (cells.size() != column.size()) {
            throw ParseError(row, 0, "expected " + std::to_string(column.size()) + " cells, got " +
                                         std::to_string(cells.size()));
        }
        auto number = [&](const std::string& name) {
            const std::size_t c = column.at(name);
            const auto v = to_double(cells[c]);
            if (!v) {
                throw ParseError(row, c + 1,
                                 "non-numeric " + name + " '" + std::string(cells[c]) + "'");
            }
            return *v;
        };

        QuoteRow q;
        try {
            q.date = parse_date(cells[column.at("date")]);
        } catch (const Error& e) {
            throw ParseError(row, column.at("date") + 1, e.what());
        }
        const auto tenor = parse_tenor(cells[column.at("tenor")]);
        if (!tenor) {
            throw ParseError(row, column.at("tenor") + 1,
                             "unknown tenor '" + std::string(cells[column.at("tenor")]) + "'");
        }
        q.tenor = *tenor;
        q.tau = year_fraction(q.date, q.tenor);
        q.spot = number("spot");
        q.ois = number("ois");
        if (column.count("fwd_points")) q.fwd_points = number("fwd_points");
        if (column.count("forward")) {
            q.forward = number("forward");
            q.fwd_points = *q.forward - q.spot;
        }

        const double vol_scale = options.vols_decimal ? 1.0 : 0.01;
        const double raw_atm = number("atm");
        const bool looks_percent = raw_atm > 3.0;
        if (looks_percent == options.vols_decimal) {
            result.warnings.push_back(
                "row " + std::to_string(row) + ": atm " + std::string(cells[column.at("atm")]) +
                (looks_percent ? " looks like percentage points but --vols-decimal is set"
                               : " looks like a decimal vol but percentage points are expected"));
        }
        q.atm = raw_atm * vol_scale;
        q.rr25 = number("rr25") * vol_scale;
        q.fly25 = number("fly25") * vol_scale;
        q.rr10 = number("rr10") * vol_scale;
        q.fly10 = number("fly10") * vol_scale;

        if (!(q.spot > 0.0)) {
            throw Error(ErrorCode::InvariantViolation, "row " + std::to_string(row) + ": spot > 0");
        }
        if (!(q.atm > 0.0)) {
            throw Error(ErrorCode::InvariantViolation, "row " + std::to_string(row) + ": atm > 0");
        }
        if (q.fly25 < -q.atm || q.fly10 < -q.atm) {
            throw Error(ErrorCode::InvariantViolation,
                        "row " + std::to_string(row) + ": fly >= -atm");
        }
        result.rows.push_back(q);
    }
    return result;
}

IngestResult ingest_csv(const std::string& path, const IngestOptions& options) {
    std::ifstream in(path);
    if (!in) raise(ErrorCode::InvalidArgument, "cannot open '" + path + "'");
    return parse_quotes(in, options);
}

// ============================================================================
// Surface construction
// ============================================================================

TenorSlice build_slice(const QuoteRow& row) {
    if (!(row.tau > 0.0)) raise(ErrorCode::InvariantViolation, "tau > 0");
    TenorSlice slice;
    slice.tenor = row.tenor;
    slice.tau = row.tau;
    slice.smile = smile_from_strategies(row.atm, row.rr25, row.fly25, row.rr10, row.fly10);
    const double forward = row.forward ? *row.forward : row.spot + row.fwd_points;
    slice.rates = rates_from_forward(row.ois, forward, row.spot, row.tau);
    for (const Pillar p : all_pillars) {
        slice.strikes[static_cast<std::size_t>(p)] =
            strike_from_delta(row.spot, slice.rates.r_d, slice.rates.r_f, row.tau,
                              slice.smile.vol(p), pillar_delta(p));
    }
    for (std::size_t i = 1; i < slice.strikes.size(); ++i) {
        if (!(slice.strikes[i] > slice.strikes[i - 1])) {
            raise(ErrorCode::InvariantViolation,
                  format_date(row.date) + " " + std::string(tenor_label(row.tenor)) +
                      ": strikes increasing across pillars");
        }
    }
    return slice;
}

VolSurface build_surface(const std::vector<QuoteRow>& rows) {
    VolSurface surface;
    if (rows.empty()) return surface;
    surface.date = rows.front().date;
    surface.spot = rows.front().spot;
    for (const auto& row : rows) {
        if (row.date != surface.date) {
            raise(ErrorCode::InvariantViolation, "rows of one surface must share a date");
        }
        if (row.spot != surface.spot) {
            raise(ErrorCode::InvariantViolation,
                  format_date(row.date) + ": spot differs across tenors");
        }
        if (surface.find(row.tenor)) {
            raise(ErrorCode::InvariantViolation,
                  "duplicate (date, tenor) pair (" + format_date(row.date) + ", " +
                      std::string(tenor_label(row.tenor)) + ")");
        }
        surface.slices.push_back(build_slice(row));
    }
    std::sort(surface.slices.begin(), surface.slices.end(),
              [](const TenorSlice& a, const TenorSlice& b) { return a.tenor < b.tenor; });
    return surface;
}

std::vector<VolSurface> build_surfaces(const std::vector<QuoteRow>& rows) {
    std::map<std::chrono::sys_days, std::vector<QuoteRow>> by_date;
    for (const auto& row : rows) by_date[std::chrono::sys_days{row.date}].push_back(row);
    std::vector<VolSurface> out;
    out.reserve(by_date.size());
    for (const auto& [day, group] : by_date) out.push_back(build_surface(group));
    return out;
}

std::vector<QuoteRow> surface_to_quotes(const VolSurface& surface) {
    std::vector<QuoteRow> rows;
    for (const auto& s : surface.slices) {
        QuoteRow q;
        q.date = surface.date;
        q.tenor = s.tenor;
        q.tau = s.tau;
        q.spot = surface.spot;
        q.ois = std::expm1(s.rates.r_f * s.tau) / s.tau;
        q.fwd_points = s.rates.forward - surface.spot;
        const auto v = [&](Pillar p) { return s.smile.vol(p); };
        q.atm = v(Pillar::ATM);
        q.rr25 = v(Pillar::C25) - v(Pillar::P25);
        q.fly25 = 0.5 * (v(Pillar::C25) + v(Pillar::P25)) - v(Pillar::ATM);
        q.rr10 = v(Pillar::C10) - v(Pillar::P10);
        q.fly10 = 0.5 * (v(Pillar::C10) + v(Pillar::P10)) - v(Pillar::ATM);
        rows.push_back(q);
    }
    return rows;
}

}  // namespace fxsv

#include "fgp/market.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "fgp/errors.hpp"
#include "fgp/rng.hpp"

namespace fgp {

namespace {

// Largest |log X| before exp overflows a double.
constexpr double kLogOverflow = 709.0;

void append_g17(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

} // namespace

void MarketModel::validate() const {
    if (n < 1) throw ConfigError("market.n: need at least one risky asset");
    if (d < n) throw ConfigError("market.d: need d >= n Brownian drivers");
    if (static_cast<int>(growth.size()) != n)
        throw ConfigError("market.growth: expected " + std::to_string(n) + " entries");
    if (vol.rows() != n || vol.cols() != d)
        throw ConfigError("market.vol: expected a " + std::to_string(n) + "x" + std::to_string(d) +
                          " loading matrix");
    if (static_cast<int>(initial_prices.size()) != n)
        throw ConfigError("market.initial_prices: expected " + std::to_string(n) + " entries");
    for (int i = 0; i < n; ++i) {
        if (!(initial_prices[i] > 0.0) || !std::isfinite(initial_prices[i]))
            throw ConfigError("market.initial_prices[" + std::to_string(i) +
                              "]: must be strictly positive");
        if (!std::isfinite(growth[i]))
            throw ConfigError("market.growth[" + std::to_string(i) + "]: must be finite");
    }
    if (!(initial_riskless > 0.0) || !std::isfinite(initial_riskless))
        throw ConfigError("market.initial_riskless: must be strictly positive");
    if (!std::isfinite(riskless_rate)) throw ConfigError("market.riskless_rate: must be finite");
    for (int i = 0; i < n; ++i)
        for (int l = 0; l < d; ++l)
            if (!std::isfinite(vol(i, l)))
                throw ConfigError("market.vol[" + std::to_string(i) + "][" + std::to_string(l) +
                                  "]: must be finite");
}

MarketModel MarketModel::from_json(const nlohmann::json& j) {
    MarketModel m;
    try {
        m.n = j.at("n").get<int>();
        m.d = j.at("d").get<int>();
        if (m.n < 1) throw ConfigError("market.n: need at least one risky asset");
        if (m.d < m.n) throw ConfigError("market.d: need d >= n Brownian drivers");
        m.growth = j.at("growth").get<std::vector<double>>();
        const auto& rows = j.at("vol");
        if (!rows.is_array()) throw ConfigError("market.vol: expected an array of rows");
        m.vol = Matrix(m.n, m.d);
        if (static_cast<int>(rows.size()) != m.n)
            throw ConfigError("market.vol: expected " + std::to_string(m.n) + " rows");
        for (int i = 0; i < m.n; ++i) {
            const auto row = rows.at(i).get<std::vector<double>>();
            if (static_cast<int>(row.size()) != m.d)
                throw ConfigError("market.vol[" + std::to_string(i) + "]: expected " +
                                  std::to_string(m.d) + " entries");
            for (int l = 0; l < m.d; ++l) m.vol(i, l) = row[l];
        }
        m.riskless_rate = j.value("riskless_rate", 0.0);
        m.initial_prices = j.at("initial_prices").get<std::vector<double>>();
        m.initial_riskless = j.value("initial_riskless", 1.0);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("market: ") + e.what());
    }
    m.validate();
    return m;
}

nlohmann::json MarketModel::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < n; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int l = 0; l < d; ++l) row.push_back(vol(i, l));
        rows.push_back(row);
    }
    return {{"n", n},
            {"d", d},
            {"growth", growth},
            {"vol", rows},
            {"riskless_rate", riskless_rate},
            {"initial_prices", initial_prices},
            {"initial_riskless", initial_riskless}};
}

CovarianceView::CovarianceView(Matrix sigma) : sigma_(std::move(sigma)) {
    if (sigma_.rows() != sigma_.cols()) throw ConfigError("covariance: matrix must be square");
}

const Matrix& CovarianceView::at(double) const {
    return sigma_;
}

double excess_growth_rate(std::span<const double> w, const Matrix& sigma) {
    const int n = static_cast<int>(w.size());
    double avg_var = 0.0;
    double port_var = 0.0;
    for (int i = 0; i < n; ++i) {
        avg_var += w[i] * sigma(i, i);
        for (int j = 0; j < n; ++j) port_var += w[i] * w[j] * sigma(i, j);
    }
    return 0.5 * (avg_var - port_var);
}

double PricePath::price(int k, int i) const {
    return std::exp(log_prices(k, i));
}

std::vector<double> PricePath::prices_at(int k) const {
    std::vector<double> x(assets());
    for (int i = 0; i < assets(); ++i) x[i] = price(k, i);
    return x;
}

void PricePath::write_csv(std::ostream& os) const {
    std::string line = "t,X0";
    for (int i = 1; i <= assets(); ++i) line += ",X" + std::to_string(i);
    line += '\n';
    os << line;
    for (int k = 0; k <= steps(); ++k) {
        line.clear();
        append_g17(line, time(k));
        line += ',';
        append_g17(line, riskless[k]);
        for (int i = 0; i < assets(); ++i) {
            line += ',';
            append_g17(line, price(k, i));
        }
        line += '\n';
        os << line;
    }
}

PricePath PricePath::read_csv(std::istream& is) {
    std::string header;
    if (!std::getline(is, header) || header.rfind("t,X0", 0) != 0)
        throw ConfigError("path csv: missing t,X0,... header");

    std::vector<double> times;
    std::vector<double> riskless;
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
        if (vals.size() < 2) throw ConfigError("path csv: short row");
        times.push_back(vals[0]);
        riskless.push_back(vals[1]);
        rows.emplace_back(vals.begin() + 2, vals.end());
    }
    if (times.size() < 2) throw ConfigError("path csv: need at least two rows");

    PricePath p;
    const int steps = static_cast<int>(times.size()) - 1;
    const int n = static_cast<int>(rows[0].size());
    p.grid = TimeGrid{times.back(), steps};
    p.riskless = std::move(riskless);
    p.log_prices = Matrix(steps + 1, n);
    for (int k = 0; k <= steps; ++k) {
        if (static_cast<int>(rows[k].size()) != n) throw ConfigError("path csv: ragged rows");
        for (int i = 0; i < n; ++i) p.log_prices(k, i) = std::log(rows[k][i]);
    }
    return p;
}

PricePath simulate_path(const MarketModel& model, const TimeGrid& grid, std::uint64_t seed,
                        std::uint64_t path_index) {
    model.validate();
    if (!(grid.horizon > 0.0)) throw ConfigError("grid.horizon: must be positive");
    if (grid.steps < 1) throw ConfigError("grid.steps: must be at least 1");

    const int n = model.n;
    const int d = model.d;
    const int m = grid.steps;
    const double dt = grid.dt();
    const double sqrt_dt = std::sqrt(dt);

    PricePath path;
    path.grid = grid;
    path.seed = seed;
    path.path_index = path_index;
    path.log_prices = Matrix(m + 1, n);
    path.riskless.resize(m + 1);
    path.increments = Matrix(m, d);

    for (int i = 0; i < n; ++i) path.log_prices(0, i) = std::log(model.initial_prices[i]);

    PathRng rng(seed, path_index);
    for (int k = 0; k < m; ++k) {
        for (int l = 0; l < d; ++l) path.increments(k, l) = sqrt_dt * rng.next_gaussian();
        for (int i = 0; i < n; ++i) {
            double diffusion = 0.0;
            for (int l = 0; l < d; ++l) diffusion += model.vol(i, l) * path.increments(k, l);
            const double next = path.log_prices(k, i) + model.growth[i] * dt + diffusion;
            if (!std::isfinite(next) || std::abs(next) > kLogOverflow)
                throw SimulationError("simulate_path: non-finite price for asset " +
                                      std::to_string(i + 1) + " at node " + std::to_string(k + 1));
            path.log_prices(k + 1, i) = next;
        }
    }
    for (int k = 0; k <= m; ++k)
        path.riskless[k] = model.initial_riskless * std::exp(model.riskless_rate * grid.time(k));
    return path;
}

CovarianceView covariance(const MarketModel& model) {
    model.validate();
    return CovarianceView(gram(model.vol));
}

PricePath discount_path(const PricePath& path) {
    PricePath out = path;
    for (int k = 0; k <= path.steps(); ++k) {
        const double shift = std::log(path.riskless[k]);
        for (int i = 0; i < path.assets(); ++i) out.log_prices(k, i) = path.log_prices(k, i) - shift;
        out.riskless[k] = 1.0;
    }
    return out;
}

PricePath coarsen_path(const PricePath& path, int factor) {
    if (factor < 1 || path.steps() % factor != 0)
        throw ConfigError("coarsen_path: factor must divide the step count");
    if (factor == 1) return path;

    const int m = path.steps() / factor;
    PricePath out;
    out.grid = TimeGrid{path.grid.horizon, m};
    out.seed = path.seed;
    out.path_index = path.path_index;
    out.log_prices = Matrix(m + 1, path.assets());
    out.riskless.resize(m + 1);
    out.increments = Matrix(m, path.increments.cols());

    for (int k = 0; k <= m; ++k) {
        for (int i = 0; i < path.assets(); ++i)
            out.log_prices(k, i) = path.log_prices(k * factor, i);
        out.riskless[k] = path.riskless[k * factor];
    }
    for (int k = 0; k < m; ++k)
        for (int l = 0; l < path.increments.cols(); ++l) {
            double s = 0.0;
            for (int j = 0; j < factor; ++j) s += path.increments(k * factor + j, l);
            out.increments(k, l) = s;
        }
    return out;
}

} // namespace fgp

#include "qspde/grid.hpp"

#include "fft.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <complex>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace qspde {
namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

std::invalid_argument grid_error(const std::string& msg) {
    return std::invalid_argument("grid: " + msg);
}

// Applies a per-mode multiplier to the half spectrum of g and transforms back.
template <typename Multiplier>
GridFunction spectral_apply(const GridFunction& g, Multiplier&& mult) {
    const std::size_t n = g.size();
    fft::Spectrum c = fft::forward(g.values());
    for (std::size_t k = 0; k < c.size(); ++k) c[k] *= mult(k, n);
    return GridFunction(fft::inverse(c, n));
}

}  // namespace

GridFunction::GridFunction(std::vector<double> values) : values_(std::move(values)) {
    if (values_.size() < min_size) {
        throw grid_error("grid size " + std::to_string(values_.size()) + " is below the minimum of 8");
    }
    for (std::size_t j = 0; j < values_.size(); ++j) {
        if (!std::isfinite(values_[j])) {
            throw grid_error("non-finite value at index " + std::to_string(j));
        }
    }
}

GridFunction GridFunction::constant(std::size_t n, double c) {
    return GridFunction(std::vector<double>(n, c));
}

double GridFunction::wrap(std::ptrdiff_t j) const {
    const auto n = static_cast<std::ptrdiff_t>(values_.size());
    std::ptrdiff_t r = j % n;
    if (r < 0) r += n;
    return values_[static_cast<std::size_t>(r)];
}

double GridFunction::min() const { return *std::min_element(values_.begin(), values_.end()); }
double GridFunction::max() const { return *std::max_element(values_.begin(), values_.end()); }

GridFunction GridFunction::operator-() const {
    return map([](double v) { return -v; });
}

GridFunction& GridFunction::operator+=(const GridFunction& other) {
    require_same_grid(*this, other, "+");
    for (std::size_t j = 0; j < values_.size(); ++j) values_[j] += other.values_[j];
    return *this;
}

GridFunction& GridFunction::operator-=(const GridFunction& other) {
    require_same_grid(*this, other, "-");
    for (std::size_t j = 0; j < values_.size(); ++j) values_[j] -= other.values_[j];
    return *this;
}

GridFunction& GridFunction::operator*=(const GridFunction& other) {
    require_same_grid(*this, other, "*");
    for (std::size_t j = 0; j < values_.size(); ++j) values_[j] *= other.values_[j];
    return *this;
}

GridFunction& GridFunction::operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
}

GridFunction& GridFunction::operator+=(double s) {
    for (double& v : values_) v += s;
    return *this;
}

GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
GridFunction operator*(GridFunction a, const GridFunction& b) { return a *= b; }
GridFunction operator*(GridFunction a, double s) { return a *= s; }
GridFunction operator*(double s, GridFunction a) { return a *= s; }
GridFunction operator+(GridFunction a, double s) { return a += s; }
GridFunction operator-(GridFunction a, double s) { return a += -s; }

GridFunction operator/(const GridFunction& a, const GridFunction& b) {
    require_same_grid(a, b, "/");
    std::vector<double> v(a.size());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = a[j] / b[j];
    return GridFunction(std::move(v));
}

void require_same_grid(const GridFunction& a, const GridFunction& b, const char* what) {
    if (a.size() != b.size()) {
        throw grid_error(std::string(what) + ": grid mismatch (" + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()) + ")");
    }
}

GridFunction differentiate(const GridFunction& g, int order, DiffMethod method) {
    if (order < 1) throw grid_error("derivative order must be positive");
    if (method == DiffMethod::central) {
        const std::size_t n = g.size();
        const double dx = g.dx();
        std::vector<double> out(n);
        if (order == 1) {
            for (std::size_t j = 0; j < n; ++j) {
                const auto i = static_cast<std::ptrdiff_t>(j);
                out[j] = (g.wrap(i + 1) - g.wrap(i - 1)) / (2.0 * dx);
            }
        } else if (order == 2) {
            for (std::size_t j = 0; j < n; ++j) {
                const auto i = static_cast<std::ptrdiff_t>(j);
                out[j] = (g.wrap(i + 1) - 2.0 * g[j] + g.wrap(i - 1)) / (dx * dx);
            }
        } else {
            throw grid_error("central differences support orders 1 and 2 only");
        }
        return GridFunction(std::move(out));
    }
    return spectral_apply(g, [order](std::size_t k, std::size_t n) {
        if (fft::is_nyquist(k, n) && order % 2 == 1) return std::complex<double>(0.0);
        const std::complex<double> ik(0.0, two_pi * static_cast<double>(k));
        std::complex<double> m = ik;
        for (int p = 1; p < order; ++p) m *= ik;
        return m;
    });
}

GridFunction forward_difference(const GridFunction& g) {
    const std::size_t n = g.size();
    const double inv_dx = static_cast<double>(n);
    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) out[j] = (g[(j + 1) % n] - g[j]) * inv_dx;
    return GridFunction(std::move(out));
}

GridFunction half_node_average(const GridFunction& g) {
    const std::size_t n = g.size();
    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) out[j] = 0.5 * (g[j] + g[(j + 1) % n]);
    return GridFunction(std::move(out));
}

GridFunction spectral_half_shift(const GridFunction& g) {
    // The Nyquist cosine vanishes at every half node.
    return spectral_apply(g, [](std::size_t k, std::size_t n) {
        if (fft::is_nyquist(k, n)) return std::complex<double>(0.0);
        return std::polar(1.0, std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
    });
}

double integrate(const GridFunction& g) {
    double sum = 0.0;
    for (double v : g.values()) sum += v;
    return sum * g.dx();
}

GridFunction antiderivative(const GridFunction& g) {
    const std::size_t n = g.size();
    fft::Spectrum c = fft::forward(g.values());
    const double mean = c[0].real() / static_cast<double>(n);
    c[0] = 0.0;
    for (std::size_t k = 1; k < c.size(); ++k) {
        // sin(pi n x)/(pi n) vanishes on the grid, so the Nyquist term drops.
        if (fft::is_nyquist(k, n)) {
            c[k] = 0.0;
        } else {
            c[k] /= std::complex<double>(0.0, two_pi * static_cast<double>(k));
        }
    }
    std::vector<double> periodic = fft::inverse(c, n);
    const double base = periodic[0];
    for (std::size_t j = 0; j < n; ++j) {
        periodic[j] += mean * static_cast<double>(j) / static_cast<double>(n) - base;
    }
    periodic[0] = 0.0;
    return GridFunction(std::move(periodic));
}

GridFunction heat_smooth(const GridFunction& g, double eps) {
    if (!(eps >= 0.0)) throw grid_error("smoothing scale must be nonnegative");
    if (eps == 0.0) return g;
    return spectral_apply(g, [eps](std::size_t k, std::size_t) {
        const double w = two_pi * static_cast<double>(k);
        return std::complex<double>(std::exp(-eps * w * w));
    });
}

// ---------------------------------------------------------------------------

void require_positive(const GridFunction& theta, const char* what) {
    for (std::size_t j = 0; j < theta.size(); ++j) {
        if (!(theta[j] > 0.0)) {
            throw std::invalid_argument(std::string(what) + ": weight must be strictly positive, got " +
                                        format_double(theta[j]) + " at index " + std::to_string(j));
        }
    }
}

double l2_norm(const GridFunction& g) {
    return std::sqrt(integrate(g * g));
}

double l2_norm(const GridFunction& g, const GridFunction& theta) {
    require_same_grid(g, theta, "l2_norm");
    require_positive(theta, "l2_norm");
    return std::sqrt(integrate(g * g * theta));
}

double spectral_l2_norm(const GridFunction& g) {
    const std::size_t n = g.size();
    const fft::Spectrum c = fft::forward(g.values());
    double sum = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) {
        const double w = (k == 0 || fft::is_nyquist(k, n)) ? 1.0 : 2.0;
        sum += w * std::norm(c[k]);
    }
    return std::sqrt(sum) / static_cast<double>(n);
}

double linf_norm(const GridFunction& g) {
    double m = 0.0;
    for (double v : g.values()) m = std::max(m, std::abs(v));
    return m;
}

double h1_seminorm(const GridFunction& g, const GridFunction& theta, Gradient grad) {
    require_same_grid(g, theta, "h1_seminorm");
    require_positive(theta, "h1_seminorm");
    if (grad == Gradient::staggered) {
        const GridFunction d = forward_difference(g);
        return std::sqrt(integrate(d * d * half_node_average(theta)));
    }
    const GridFunction d = differentiate(g);
    return std::sqrt(integrate(d * d * theta));
}

double h1_norm(const GridFunction& g, const GridFunction& theta, Gradient grad) {
    const double l2 = l2_norm(g, theta);
    const double semi = h1_seminorm(g, theta, grad);
    return std::sqrt(l2 * l2 + semi * semi);
}

double h1_norm(const GridFunction& g, Gradient grad) {
    return h1_norm(g, GridFunction::constant(g.size(), 1.0), grad);
}

double holder_estimate(const GridFunction& g, double beta) {
    if (!(beta > 0.0 && beta < 1.0)) throw grid_error("Hoelder exponent must lie in (0,1)");
    const std::size_t n = g.size();
    double best = 0.0;
    for (std::size_t lag = 1; 2 * lag <= n; lag *= 2) {
        double worst = 0.0;
        for (std::size_t j = 0; j < n; ++j) worst = std::max(worst, std::abs(g[(j + lag) % n] - g[j]));
        const double h = static_cast<double>(lag) / static_cast<double>(n);
        best = std::max(best, worst / std::pow(h, beta));
    }
    return linf_norm(g) + best;
}

double norm(const GridFunction& g, const NormKind& kind) {
    return std::visit(
        [&g](const auto& k) -> double {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, norm_kind::L2>) {
                return l2_norm(g);
            } else if constexpr (std::is_same_v<K, norm_kind::L2Weighted>) {
                return l2_norm(g, *k.theta);
            } else if constexpr (std::is_same_v<K, norm_kind::H1>) {
                return h1_norm(g);
            } else if constexpr (std::is_same_v<K, norm_kind::H1Weighted>) {
                return h1_norm(g, *k.theta);
            } else if constexpr (std::is_same_v<K, norm_kind::Linf>) {
                return linf_norm(g);
            } else {
                return holder_estimate(g, k.exponent);
            }
        },
        kind);
}

// ---------------------------------------------------------------------------

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

namespace {

double parse_double(std::string_view s, std::size_t line) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw grid_error("csv line " + std::to_string(line) + ": cannot parse '" + std::string(s) + "'");
    }
    return v;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode) {
    std::ifstream is(path, mode);
    if (!is) throw std::runtime_error("cannot open " + path.string() + " for reading");
    return is;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode) {
    std::ofstream os(path, mode);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    return os;
}

void put_u64(std::ostream& os, std::uint64_t v) {
    char bytes[8];
    for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((v >> (8 * b)) & 0xffu);
    os.write(bytes, 8);
}

bool get_u64(std::istream& is, std::uint64_t& v) {
    unsigned char bytes[8];
    if (!is.read(reinterpret_cast<char*>(bytes), 8)) return false;
    v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
    return true;
}

}  // namespace

void write_csv(std::ostream& os, const GridFunction& g) {
    os << "x,value\n";
    for (std::size_t j = 0; j < g.size(); ++j) {
        os << format_double(g.x(j)) << ',' << format_double(g[j]) << '\n';
    }
}

void write_csv(const std::filesystem::path& path, const GridFunction& g) {
    auto os = open_out(path, std::ios::out);
    write_csv(os, g);
}

GridFunction read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "x,value") throw grid_error("csv: missing header 'x,value'");
    std::vector<double> values;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw grid_error("csv line " + std::to_string(lineno) + ": expected two columns");
        values.push_back(parse_double(std::string_view(line).substr(comma + 1), lineno));
    }
    return GridFunction(std::move(values));
}

GridFunction read_csv(const std::filesystem::path& path) {
    auto is = open_in(path, std::ios::in);
    return read_csv(is);
}

void write_binary(std::ostream& os, const GridFunction& g) {
    put_u64(os, g.size());
    for (double v : g.values()) put_u64(os, std::bit_cast<std::uint64_t>(v));
}

void write_binary(const std::filesystem::path& path, const GridFunction& g) {
    auto os = open_out(path, std::ios::out | std::ios::binary);
    write_binary(os, g);
}

GridFunction read_binary(std::istream& is) {
    std::uint64_t n = 0;
    if (!get_u64(is, n)) throw grid_error("binary: truncated header");
    if (n > (std::uint64_t{1} << 32)) throw grid_error("binary: implausible size " + std::to_string(n));
    std::vector<double> values(n);
    for (auto& v : values) {
        std::uint64_t bits = 0;
        if (!get_u64(is, bits)) throw grid_error("binary: truncated data");
        v = std::bit_cast<double>(bits);
    }
    return GridFunction(std::move(values));
}

GridFunction read_binary(const std::filesystem::path& path) {
    auto is = open_in(path, std::ios::in | std::ios::binary);
    return read_binary(is);
}

}  // namespace qspde

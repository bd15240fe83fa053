#include "tasep/lattice.hpp"

#include <bit>
#include <stdexcept>

namespace tasep {

namespace {

std::size_t wordCount(std::size_t sites) { return (sites + 63) / 64; }

// Mask of the valid bits in the last word.
std::uint64_t tailMask(std::size_t sites) {
    const std::size_t rem = sites % 64;
    return rem == 0 ? ~std::uint64_t{0} : (std::uint64_t{1} << rem) - 1;
}

}  // namespace

RingGeometry::RingGeometry(std::size_t halfSize) : half_(halfSize) {
    if (halfSize < 2) throw std::invalid_argument("ring needs at least 4 sites (L >= 2)");
}

std::size_t RingGeometry::indexOfSite(long site) const {
    const long n = static_cast<long>(siteCount());
    if (site >= 1 && site <= n) return static_cast<std::size_t>(site - 1);
    if (site <= -1 && site >= -n) return static_cast<std::size_t>(n + site);
    throw std::out_of_range("site label outside [-2L, -1] U [1, 2L]");
}

Configuration::Configuration(RingGeometry geometry)
    : geometry_(geometry), words_(wordCount(geometry.siteCount()), 0) {}

Configuration Configuration::fromString(std::string_view bits) {
    if (bits.size() < 4 || bits.size() % 2 != 0)
        throw std::invalid_argument("configuration length must be even and at least 4");
    Configuration c{RingGeometry(bits.size() / 2)};
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] != '0' && bits[i] != '1')
            throw std::invalid_argument("configuration string may only contain '0' and '1'");
        c.set(i, bits[i] == '1');
    }
    return c;
}

Configuration Configuration::fromBits(std::span<const int> bits) {
    std::string s;
    s.reserve(bits.size());
    for (int b : bits) {
        if (b != 0 && b != 1) throw std::invalid_argument("occupancy must be 0 or 1");
        s.push_back(b ? '1' : '0');
    }
    return fromString(s);
}

Configuration Configuration::fromMask(RingGeometry geometry, std::uint64_t mask) {
    if (geometry.siteCount() > 64) throw std::invalid_argument("fromMask needs siteCount <= 64");
    Configuration c{geometry};
    c.words_[0] = mask & tailMask(geometry.siteCount());
    return c;
}

void Configuration::set(std::size_t index, bool occupied) noexcept {
    const std::uint64_t bit = std::uint64_t{1} << (index % 64);
    if (occupied)
        words_[index / 64] |= bit;
    else
        words_[index / 64] &= ~bit;
}

std::string Configuration::toString() const {
    std::string s(size(), '0');
    for (std::size_t i = 0; i < size(); ++i)
        if ((*this)[i]) s[i] = '1';
    return s;
}

std::size_t ConfigurationHash::operator()(const Configuration& c) const noexcept {
    std::size_t h = c.size();
    for (std::uint64_t w : c.words()) h ^= std::hash<std::uint64_t>{}(w) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
}

Configuration shiftedFromNext(const Configuration& x) {
    const std::size_t n = x.size();
    Configuration r{x.geometry()};
    auto in = x.words();
    auto out = r.words();
    const std::size_t nw = in.size();
    for (std::size_t w = 0; w < nw; ++w) {
        std::uint64_t v = in[w] >> 1;
        if (w + 1 < nw) v |= in[w + 1] << 63;
        out[w] = v;
    }
    out[nw - 1] &= tailMask(n);
    r.set(n - 1, x[0]);
    return r;
}

Configuration shiftedFromPrevious(const Configuration& x) {
    const std::size_t n = x.size();
    Configuration r{x.geometry()};
    auto in = x.words();
    auto out = r.words();
    const std::size_t nw = in.size();
    for (std::size_t w = 0; w < nw; ++w) {
        std::uint64_t v = in[w] << 1;
        if (w > 0) v |= in[w - 1] >> 63;
        out[w] = v;
    }
    out[nw - 1] &= tailMask(n);
    r.set(0, x[n - 1]);
    return r;
}

Configuration engineMask(const Configuration& sigma) {
    Configuration ahead = shiftedFromNext(sigma);
    auto a = ahead.words();
    auto s = sigma.words();
    for (std::size_t w = 0; w < a.size(); ++w) a[w] = s[w] & ~a[w];
    return ahead;
}

Configuration advance(const Configuration& sigma, const Configuration& moved) {
    Configuration arrived = shiftedFromPrevious(moved);
    auto a = arrived.words();
    auto s = sigma.words();
    auto m = moved.words();
    for (std::size_t w = 0; w < a.size(); ++w) a[w] |= s[w] & ~m[w];
    return arrived;
}

std::size_t popcount(const Configuration& x) noexcept {
    std::size_t total = 0;
    for (std::uint64_t w : x.words()) total += static_cast<std::size_t>(std::popcount(w));
    return total;
}

std::size_t particleCount(const Configuration& sigma) noexcept { return popcount(sigma); }

std::size_t engineCount(const Configuration& sigma) { return popcount(engineMask(sigma)); }

std::size_t firstHalfCount(const Configuration& sigma) noexcept {
    std::size_t r = 0;
    for (std::size_t i = 0; i < sigma.geometry().halfSize(); ++i) r += sigma[i];
    return r;
}

TrainDecomposition trains(const Configuration& sigma) {
    const RingGeometry& g = sigma.geometry();
    TrainDecomposition out;
    for (std::size_t i = 0; i < g.siteCount(); ++i) {
        // A caboose is an occupied site whose predecessor is empty.
        if (!sigma[i] || sigma[g.previous(i)]) continue;
        std::size_t len = 1;
        std::size_t j = i;
        while (sigma[g.next(j)]) {
            j = g.next(j);
            ++len;
        }
        out.trains.push_back({i, len});
    }
    return out;
}

bool isPhSymmetric(const Configuration& sigma) noexcept {
    const RingGeometry& g = sigma.geometry();
    for (std::size_t i = 0; i < g.halfSize(); ++i)
        if (sigma[i] == sigma[g.mirror(i)]) return false;
    return true;
}

bool isInOmegaInf(const Configuration& sigma) noexcept {
    if (!isPhSymmetric(sigma)) return false;
    const RingGeometry& g = sigma.geometry();
    for (std::size_t i = 0; i < g.halfSize(); ++i)
        if (sigma[i] && sigma[g.next(i)]) return false;
    return true;
}

Configuration queueConfiguration(const RingGeometry& geometry) {
    Configuration c{geometry};
    for (std::size_t i = geometry.halfSize(); i < geometry.siteCount(); ++i) c.set(i, true);
    return c;
}

Configuration alternatingConfiguration(const RingGeometry& geometry) {
    Configuration c{geometry};
    for (std::size_t i = 0; i < geometry.siteCount(); i += 2) c.set(i, true);
    return c;
}

void forEachConfiguration(const RingGeometry& geometry, std::size_t m,
                          const std::function<void(const Configuration&)>& visit) {
    const std::size_t n = geometry.siteCount();
    if (n > 62) throw std::invalid_argument("enumeration supports at most 62 sites");
    if (m > n) throw std::invalid_argument("particle count exceeds site count");
    if (m == 0) {
        visit(Configuration{geometry});
        return;
    }
    const std::uint64_t limit = std::uint64_t{1} << n;
    std::uint64_t v = (std::uint64_t{1} << m) - 1;
    // Gosper's hack: next integer with the same popcount.
    while (v < limit) {
        visit(Configuration::fromMask(geometry, v));
        const std::uint64_t t = v | (v - 1);
        v = (t + 1) | (((~t & -~t) - 1) >> (std::countr_zero(v) + 1));
    }
}

std::vector<Configuration> enumerateConfigurations(const RingGeometry& geometry, std::size_t m) {
    std::vector<Configuration> out;
    forEachConfiguration(geometry, m, [&](const Configuration& c) { out.push_back(c); });
    return out;
}

BigInt binomial(long n, long k) {
    if (n < 0 || k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    BigInt r = 1;
    for (long i = 1; i <= k; ++i) {
        r *= n - k + i;
        r /= i;
    }
    return r;
}

BigInt trainCountTable(std::size_t L, std::size_t l) {
    if (L < 1 || l < 1 || l > L) throw std::invalid_argument("trainCountTable needs 1 <= l <= L");
    // One train of L particles: 2L rotations.
    if (l == 1) return BigInt(2 * L);
    const long Ls = static_cast<long>(L);
    const long ls = static_cast<long>(l);
    BigInt inner = 0;
    for (long l1 = 1; l1 <= Ls - ls + 1; ++l1) inner += BigInt(l1) * binomial(Ls - l1 - 1, ls - 2);
    return 2 * inner * binomial(Ls - 1, ls - 1);
}

}  // namespace tasep

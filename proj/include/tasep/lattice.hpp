#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace tasep {

using BigInt = boost::multiprecision::cpp_int;

/**
 * @brief Ring of 2L sites with a blockage on the bond closing the ring.
 * @details Sites carry 0-based indices 0..2L-1; index k is site k+1 in the
 *          1-based numbering. The blockage bond joins index 2L-1 to index 0.
 */
class RingGeometry {
public:
    explicit RingGeometry(std::size_t halfSize);

    [[nodiscard]] std::size_t halfSize() const noexcept { return half_; }
    [[nodiscard]] std::size_t siteCount() const noexcept { return 2 * half_; }

    // Index of the site sitting just before the blockage bond (site 2L).
    [[nodiscard]] std::size_t blockageIndex() const noexcept { return siteCount() - 1; }

    [[nodiscard]] std::size_t next(std::size_t index) const noexcept {
        return index + 1 == siteCount() ? 0 : index + 1;
    }
    [[nodiscard]] std::size_t previous(std::size_t index) const noexcept {
        return index == 0 ? siteCount() - 1 : index - 1;
    }

    // Mirror image across the blockage bond: site i <-> site -i, i.e. index k <-> 2L-1-k.
    [[nodiscard]] std::size_t mirror(std::size_t index) const noexcept {
        return siteCount() - 1 - index;
    }

    /// Maps a 1-based site label to an index. Labels -2L..-1 follow the
    /// convention sigma_{-i} = sigma_{2L-i+1}. Throws std::out_of_range otherwise.
    [[nodiscard]] std::size_t indexOfSite(long site) const;

    friend bool operator==(const RingGeometry&, const RingGeometry&) = default;

private:
    std::size_t half_;
};

/**
 * @brief Occupancy of every site of a ring, packed 64 sites per word.
 *
 * Bits beyond siteCount() in the last word are always zero, so word-wise
 * equality and hashing coincide with site-wise equality.
 */
class Configuration {
public:
    explicit Configuration(RingGeometry geometry);

    /// Parses '0'/'1' characters in site order 1..2L. The length must be even and >= 4.
    static Configuration fromString(std::string_view bits);
    static Configuration fromBits(std::span<const int> bits);
    /// Low bit of @p mask is site 1. Requires siteCount <= 64.
    static Configuration fromMask(RingGeometry geometry, std::uint64_t mask);

    [[nodiscard]] const RingGeometry& geometry() const noexcept { return geometry_; }
    [[nodiscard]] std::size_t size() const noexcept { return geometry_.siteCount(); }

    [[nodiscard]] bool operator[](std::size_t index) const noexcept {
        return (words_[index / 64] >> (index % 64)) & 1u;
    }
    void set(std::size_t index, bool occupied) noexcept;

    [[nodiscard]] std::span<const std::uint64_t> words() const noexcept { return words_; }
    [[nodiscard]] std::span<std::uint64_t> words() noexcept { return words_; }

    /// Low 64 sites as an integer; exact when siteCount <= 64.
    [[nodiscard]] std::uint64_t lowMask() const noexcept { return words_.front(); }

    [[nodiscard]] std::string toString() const;

    friend bool operator==(const Configuration&, const Configuration&) = default;

private:
    RingGeometry geometry_;
    std::vector<std::uint64_t> words_;
};

struct ConfigurationHash {
    std::size_t operator()(const Configuration& c) const noexcept;
};

struct Train {
    std::size_t caboose;  // index of the rearmost particle
    std::size_t length;
    friend bool operator==(const Train&, const Train&) = default;
};

struct TrainDecomposition {
    std::vector<Train> trains;  // ordered by caboose index
    [[nodiscard]] std::size_t engineCount() const noexcept { return trains.size(); }
};

// Word-parallel ring shifts. shiftedFromNext(x)[i] = x[i+1]; shiftedFromPrevious(x)[i] = x[i-1].
[[nodiscard]] Configuration shiftedFromNext(const Configuration& x);
[[nodiscard]] Configuration shiftedFromPrevious(const Configuration& x);

/// Occupied sites whose clockwise neighbour is empty, as a bit mask.
[[nodiscard]] Configuration engineMask(const Configuration& sigma);

/// Moves every particle flagged in @p moved one site clockwise.
/// @p moved must be a subset of engineMask(sigma).
[[nodiscard]] Configuration advance(const Configuration& sigma, const Configuration& moved);

[[nodiscard]] std::size_t popcount(const Configuration& x) noexcept;
[[nodiscard]] std::size_t particleCount(const Configuration& sigma) noexcept;
[[nodiscard]] std::size_t engineCount(const Configuration& sigma);
/// Particles in sites 1..L.
[[nodiscard]] std::size_t firstHalfCount(const Configuration& sigma) noexcept;

[[nodiscard]] TrainDecomposition trains(const Configuration& sigma);

[[nodiscard]] bool isPhSymmetric(const Configuration& sigma) noexcept;
[[nodiscard]] bool isInOmegaInf(const Configuration& sigma) noexcept;

/// Empty first half, full second half.
[[nodiscard]] Configuration queueConfiguration(const RingGeometry& geometry);
/// 1010...10: particles on odd sites.
[[nodiscard]] Configuration alternatingConfiguration(const RingGeometry& geometry);

/**
 * @brief All configurations with @p m particles.
 *
 * Order: ascending value of the integer sum_i sigma_i 2^(i-1) (site 1 is the
 * least significant bit). Requires siteCount <= 62 and 0 <= m <= siteCount.
 */
void forEachConfiguration(const RingGeometry& geometry, std::size_t m,
                          const std::function<void(const Configuration&)>& visit);
[[nodiscard]] std::vector<Configuration> enumerateConfigurations(const RingGeometry& geometry,
                                                                 std::size_t m);

[[nodiscard]] BigInt binomial(long n, long k);

/// Number of half-filled configurations on 2L sites with exactly l trains.
[[nodiscard]] BigInt trainCountTable(std::size_t L, std::size_t l);

}  // namespace tasep

#pragma once

#include <array>
#include <cstddef>

namespace gradeprobe {

inline constexpr std::size_t kRatingClasses = 5;
inline constexpr double kDistributionTolerance = 1e-6;

// Grader output: probabilities over internal classes 0..4 (display ratings 1..5).
class RatingDistribution {
public:
    using Probabilities = std::array<double, kRatingClasses>;

    // Throws InputError unless every entry is in [0,1] and the sum is 1 within 1e-6.
    static RatingDistribution from_probs(const Probabilities& probs);
    static RatingDistribution one_hot(std::size_t rating_class);
    static RatingDistribution uniform();

    [[nodiscard]] const Probabilities& probs() const noexcept { return probs_; }
    [[nodiscard]] double operator[](std::size_t k) const { return probs_.at(k); }

    bool operator==(const RatingDistribution&) const = default;

private:
    explicit RatingDistribution(const Probabilities& probs) : probs_(probs) {}

    Probabilities probs_{};
};

[[nodiscard]] bool is_valid_distribution(const RatingDistribution::Probabilities& probs);

// Sum over k of k * p(k); lies in [0, 4].
[[nodiscard]] double expected_rating(const RatingDistribution& dist) noexcept;

[[nodiscard]] constexpr int display_rating(std::size_t rating_class) noexcept {
    return static_cast<int>(rating_class) + 1;
}

} // namespace gradeprobe

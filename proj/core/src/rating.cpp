#include "gradeprobe/rating.hpp"

#include <cmath>
#include <sstream>

#include "gradeprobe/errors.hpp"

namespace gradeprobe {

bool is_valid_distribution(const RatingDistribution::Probabilities& probs) {
    double sum = 0.0;
    for (double p : probs) {
        if (!std::isfinite(p) || p < 0.0 || p > 1.0) return false;
        sum += p;
    }
    return std::abs(sum - 1.0) <= kDistributionTolerance;
}

RatingDistribution RatingDistribution::from_probs(const Probabilities& probs) {
    if (!is_valid_distribution(probs)) {
        std::ostringstream msg;
        msg << "invalid rating distribution [";
        for (std::size_t k = 0; k < probs.size(); ++k) msg << (k ? ", " : "") << probs[k];
        msg << "]";
        throw InputError(msg.str());
    }
    return RatingDistribution(probs);
}

RatingDistribution RatingDistribution::one_hot(std::size_t rating_class) {
    if (rating_class >= kRatingClasses) throw InputError("rating class out of range");
    Probabilities p{};
    p[rating_class] = 1.0;
    return RatingDistribution(p);
}

RatingDistribution RatingDistribution::uniform() {
    Probabilities p;
    p.fill(1.0 / static_cast<double>(kRatingClasses));
    return RatingDistribution(p);
}

double expected_rating(const RatingDistribution& dist) noexcept {
    double e = 0.0;
    const auto& p = dist.probs();
    for (std::size_t k = 0; k < kRatingClasses; ++k) e += static_cast<double>(k) * p[k];
    return e;
}

} // namespace gradeprobe

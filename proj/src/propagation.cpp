#include "sectrack/propagation.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sectrack {

RssSample emit_rss(const RadioParams& params, const Point2& target_pos, const Point2& anchor_pos,
                   double shadow_db, int anchor_id, int step) {
  const double sq_dist = (target_pos - anchor_pos).squaredNorm();
  if (sq_dist <= 0.0) {
    throw std::domain_error("emit_rss: target coincides with anchor " +
                            std::to_string(anchor_id) + " (log of zero distance)");
  }
  const double d0_sq = params.d0_m * params.d0_m;
  const double pr_db = params.p0_db - params.alpha * std::log10(sq_dist / d0_sq) + shadow_db;
  return RssSample{anchor_id, pr_db, step};
}

double rss_to_sq_distance(const RadioParams& params, const RssSample& sample) {
  return std::pow(10.0, -(sample.pr_db - params.p0_db) / params.alpha);
}

double rss_to_distance(const RadioParams& params, const RssSample& sample) {
  return std::sqrt(rss_to_sq_distance(params, sample));
}

}  // namespace sectrack

#pragma once

#include "sectrack/types.hpp"

namespace sectrack {

// Log-distance path-loss channel: Pr = P0 - alpha*log10(d^2) + n, with n the
// zero-mean log-normal shadowing term in dB. Note alpha multiplies the log of
// the *squared* distance, so alpha = 5 * (conventional path-loss exponent).
struct RadioParams {
  double p0_db = -40.0;   // emitted power at the reference distance, dB
  double alpha = 16.0;    // path-loss parameter (exponent 3.2)
  double d0_m = 1.0;      // reference distance; the measurement model assumes 1 m
  double sigma_db = 0.5;  // shadowing standard deviation, dB
};

struct RssSample {
  int anchor_id = 0;
  double pr_db = 0.0;  // received power, dB
  int step = 0;
};

// Received power for a target/anchor pair with a given shadowing draw.
// Throws std::domain_error when the two positions coincide.
RssSample emit_rss(const RadioParams& params, const Point2& target_pos,
                   const Point2& anchor_pos, double shadow_db,
                   int anchor_id = 0, int step = 0);

// Inverts the path loss back to a squared-distance measurement z. With
// shadowing n this equals (true d^2) * 10^(-n/alpha) exactly.
double rss_to_sq_distance(const RadioParams& params, const RssSample& sample);

// sqrt of the above, commensurate with a Euclidean distance.
double rss_to_distance(const RadioParams& params, const RssSample& sample);

}  // namespace sectrack

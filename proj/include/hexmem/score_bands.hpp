#pragma once

namespace hexmem {

// Target score band shared by the R1/R2 rewards and the rule-based
// controllers: above kHighScore the task is too easy, below kLowScore too
// hard. Both bounds belong to the band.
inline constexpr double kHighScore = 0.9;
inline constexpr double kLowScore = 0.7;

}  // namespace hexmem

#ifndef JCMP_MOTION_HPP
#define JCMP_MOTION_HPP

#include <Eigen/Dense>

#include <stdexcept>

namespace jcmp {
namespace motion {

using Vec2 = Eigen::Vector2d;

// Drive power model P(v) = k1*v + k2 while moving, zero while idle. The robot
// moves at v_max and idles for the rest of the step, so the energy for a leg
// depends on its length only.
struct MotionParams {
    double k1 = 7.4;    // J/m
    double k2 = 0.29;   // W, constant draw while moving
    double v_max = 1.0; // m/s
};

inline void validate(const MotionParams& mp) {
    if (!(mp.k1 >= 0.0)) throw std::domain_error("MotionParams.k1 must be >= 0");
    if (!(mp.k2 >= 0.0)) throw std::domain_error("MotionParams.k2 must be >= 0");
    if (!(mp.v_max > 0.0)) throw std::domain_error("MotionParams.v_max must be > 0");
}

// Closed ball of radius v_max * dt.
inline bool reachable(const Vec2& x_from, const Vec2& x_to, double dt,
                      const MotionParams& mp) {
    if (!(dt > 0.0)) throw std::domain_error("reachable: dt must be > 0");
    return (x_to - x_from).norm() <= mp.v_max * dt;
}

// k1*dist + k2*(dist/v_max); linear in dist, zero for zero displacement.
inline double motion_energy(double dist, const MotionParams& mp) {
    if (dist < 0.0) throw std::domain_error("motion_energy: distance must be >= 0");
    return mp.k1 * dist + mp.k2 * dist / mp.v_max;
}

} // namespace motion
} // namespace jcmp

#endif

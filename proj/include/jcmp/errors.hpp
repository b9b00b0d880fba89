#ifndef JCMP_ERRORS_HPP
#define JCMP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace jcmp {

// No feasible plan exists under the current power cap / PER budget.
// Carries enough context to tell the caller what was binding.
class InfeasibleError : public std::runtime_error {
public:
    explicit InfeasibleError(const std::string& what_arg,
                             double shortfall_watts = 0.0,
                             std::string binding_link = {},
                             int step = -1)
        : std::runtime_error(what_arg),
          shortfall_watts_(shortfall_watts),
          binding_link_(std::move(binding_link)),
          step_(step) {}

    // Minimum extra transmit power that would make the tightest option feasible.
    double shortfall_watts() const { return shortfall_watts_; }
    // "sense->router" or "router->base" when a relay link was the binding one.
    const std::string& binding_link() const { return binding_link_; }
    // 1-based step number as reported to the user, or -1 when the error is
    // not tied to a trajectory step.
    int step() const { return step_; }

    void set_step(int step) { step_ = step; }

private:
    double shortfall_watts_;
    std::string binding_link_;
    int step_;
};

// Malformed or invalid configuration input (scenario files, mode tables, run logs).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

} // namespace jcmp

#endif

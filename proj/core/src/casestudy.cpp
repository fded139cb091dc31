#include "lpvccm/casestudy.hpp"

#include <cmath>

namespace lpvccm {
namespace casestudy {

SystemModel plant() { return make_registered_model("rugh1991"); }

EquilibriumFamily family_w(const SystemModel& model) {
    return EquilibriumFamily(model, {"s"}, {"0", "s"}, {"exp(-s) - 1"}, {"s"},
                             {"0", "s"}, {"x2"}, {{-3.0, 3.0}}, {0.5});
}

EquilibriumFamily family_sigma(const SystemModel& model) {
    return EquilibriumFamily(model, {"s"}, {"0", "-ln(s)"}, {"s - 1"}, {"-ln(s)"},
                             {"0", "-ln(s)"}, {"exp(-x2)"},
                             {{std::exp(-3.0), std::exp(3.0)}}, {0.5});
}

ExprMatrix lpv_gain_sigma(const EquilibriumFamily& fam) {
    return ExprMatrix::parse({{"1", "-3 - s"}}, fam.sigma_vars());
}

ExprMatrix lpv_gain_w(const EquilibriumFamily& fam) {
    return ExprMatrix::parse({{"1", "-(3 + exp(-s))"}}, fam.sigma_vars());
}

GainScheduledController gsc1(const SystemModel& model) {
    EquilibriumFamily fam = family_w(model);
    ExprMatrix gain = lpv_gain_w(fam);
    return GainScheduledController(std::move(fam), std::move(gain),
                                   GsMode::ReferenceScheduled);
}

GainScheduledController gsc2(const SystemModel& model) {
    EquilibriumFamily fam = family_w(model);
    ExprMatrix gain = lpv_gain_w(fam);
    return GainScheduledController(std::move(fam), std::move(gain), GsMode::StateScheduled);
}

CCMController ccm(const SystemModel& model) {
    Variables xu = Variables::cat(model.state_vars(), model.input_vars());
    ExprMatrix gain = ExprMatrix::parse({{"1", "-(3 + exp(-x2))"}}, xu);
    return CCMController(std::move(gain), Metric::identity(model.state_vars()));
}

namespace {

ReferenceSignal make_reference(const SystemModel& model, ScalarSignal channel) {
    EquilibriumFamily fam = family_w(model);
    Variables uv({"s", "sdot"},
                 {VarRole::Scheduling, VarRole::Scheduling});
    ExprVector u_star = ExprVector::parse(std::vector<std::string>{"exp(-s) - 1 + sdot"}, uv);
    std::vector<ScalarSignal> channels{std::move(channel)};
    return ReferenceSignal::from_family(std::move(fam), std::move(channels),
                                        std::move(u_star));
}

}  // namespace

ReferenceSignal step_reference(const SystemModel& model) {
    return make_reference(model, ScalarSignal::piecewise({0.0, 7.0, 14.0}, {0.0, 1.0, -2.0}));
}

ReferenceSignal sine_reference(const SystemModel& model) {
    return make_reference(model, ScalarSignal::sinusoid(0.5, 1.0));
}

ReferenceSignal constant_reference(const SystemModel& model, double level) {
    return make_reference(model, ScalarSignal::constant(level));
}

Vector default_x0() { return Eigen::Vector2d(1.0, 1.0); }
Vector unstable_x0() { return Eigen::Vector2d(-3.0, -2.0); }
Vector stable_x0() { return Eigen::Vector2d(-3.0, -1.0); }

}  // namespace casestudy
}  // namespace lpvccm

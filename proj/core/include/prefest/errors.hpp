#pragma once

#include <stdexcept>
#include <string>

namespace prefest {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NoIndifferencePoint : Error {
    using Error::Error;
};
struct DegenerateRow : Error {
    using Error::Error;
};
struct IncompleteProfile : Error {
    using Error::Error;
};
struct UnsupportedCurvature : Error {
    using Error::Error;
};
struct DesignMismatch : Error {
    using Error::Error;
};
struct NonFiniteUtility : Error {
    using Error::Error;
};

// Carries the offending respondent/parameter; the optimizer treats this as a
// rejected step rather than a hard failure.
struct InfeasibleParameters : Error {
    InfeasibleParameters(std::string respondent, std::string parameter, double value)
        : Error("infeasible parameter " + parameter + "=" + std::to_string(value) +
                " for respondent " + respondent),
          respondent_id(std::move(respondent)),
          parameter_name(std::move(parameter)),
          parameter_value(value) {}
    std::string respondent_id;
    std::string parameter_name;
    double parameter_value;
};

struct InfeasibleInit : Error {
    using Error::Error;
};
struct SingularHessian : Error {
    SingularHessian(const std::string& msg, double cond) : Error(msg), condition(cond) {}
    double condition;
};
struct RankDeficient : Error {
    using Error::Error;
};
struct ParseError : Error {
    using Error::Error;
};
struct ReferentialError : Error {
    using Error::Error;
};

}  // namespace prefest

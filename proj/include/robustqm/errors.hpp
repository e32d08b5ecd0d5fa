#pragma once

#include <stdexcept>
#include <string>

namespace robustqm {

// Base of every numerical failure raised by the library. name() is the
// stable identifier written into run manifests.
class Error : public std::runtime_error {
  public:
    Error(std::string name, const std::string& what)
        : std::runtime_error(what), name_(std::move(name)) {}

    const std::string& name() const noexcept { return name_; }

  private:
    std::string name_;
};

#define ROBUSTQM_DEFINE_ERROR(Type)                                           \
    class Type : public Error {                                               \
      public:                                                                 \
        explicit Type(const std::string& what) : Error(#Type, what) {}        \
    };

ROBUSTQM_DEFINE_ERROR(DomainError)
ROBUSTQM_DEFINE_ERROR(ResourceError)
ROBUSTQM_DEFINE_ERROR(EmptyData)
ROBUSTQM_DEFINE_ERROR(InvalidModel)
ROBUSTQM_DEFINE_ERROR(BranchError)
ROBUSTQM_DEFINE_ERROR(ConvergenceError)
ROBUSTQM_DEFINE_ERROR(PhaseUndefined)
ROBUSTQM_DEFINE_ERROR(LinearSolveError)
ROBUSTQM_DEFINE_ERROR(StabilityError)

#undef ROBUSTQM_DEFINE_ERROR

} // namespace robustqm

#pragma once
// Exception types shared by all modules. Each carries an exit-code class
// used by the command-line tool.

#include <stdexcept>
#include <string>

namespace fdyn {

enum class ErrorClass { Structural = 1, Parse = 2, Precondition = 3, Budget = 4, Construction = 5 };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass c, const std::string& module, const std::string& msg)
      : std::runtime_error(module + ": " + msg), cls_(c), module_(module) {}
  ErrorClass error_class() const { return cls_; }
  const std::string& module() const { return module_; }
  int exit_code() const {
    switch (cls_) {
      case ErrorClass::Parse: return 2;
      case ErrorClass::Precondition: return 3;
      case ErrorClass::Budget: return 4;
      case ErrorClass::Construction: return 5;
      default: return 3;
    }
  }

 private:
  ErrorClass cls_;
  std::string module_;
};

struct StructuralError : Error {
  explicit StructuralError(const std::string& m, const std::string& mod = "jet")
      : Error(ErrorClass::Structural, mod, m) {}
};
struct PreconditionError : Error {
  PreconditionError(const std::string& mod, const std::string& m)
      : Error(ErrorClass::Precondition, mod, m) {}
};
// Raised by divide_by_var; `monomial` is the printed offending monomial.
struct DivisibilityError : Error {
  DivisibilityError(const std::string& m, std::string mono)
      : Error(ErrorClass::Precondition, "jet", m), monomial(std::move(mono)) {}
  std::string monomial;
};
struct NotInvariant : Error {
  NotInvariant(int ord, int comp)
      : Error(ErrorClass::Precondition, "curves",
              "curve not invariant: first inconsistency at order " + std::to_string(ord) +
                  " in component " + std::to_string(comp)),
        order(ord), component(comp) {}
  int order;
  int component;
};
struct BudgetError : Error {
  BudgetError(const std::string& mod, const std::string& m, int required = -1)
      : Error(ErrorClass::Budget, mod, m), required_order(required) {}
  int required_order;
};
struct PrecisionError : Error {
  PrecisionError(const std::string& mod, const std::string& m) : Error(ErrorClass::Budget, mod, m) {}
};
struct NotInForm : Error {
  explicit NotInForm(const std::string& clause)
      : Error(ErrorClass::Precondition, "rs", "not in Ramis-Sibuya form: " + clause), clause(clause) {}
  std::string clause;
};
struct OrbitOrderingError : Error {
  explicit OrbitOrderingError(const std::string& m) : Error(ErrorClass::Construction, "parabolic", m) {}
};
struct SectorExitError : Error {
  explicit SectorExitError(const std::string& m) : Error(ErrorClass::Construction, "parabolic", m) {}
};
struct TailError : Error {
  explicit TailError(const std::string& m) : Error(ErrorClass::Construction, "parabolic", m) {}
};
struct ConstructionFailed : Error {
  explicit ConstructionFailed(const std::string& m, const std::string& mod = "parabolic")
      : Error(ErrorClass::Construction, mod, m) {}
};
struct ParseError : Error {
  ParseError(int ln, int col, const std::string& m)
      : Error(ErrorClass::Parse, "parse",
              "line " + std::to_string(ln) + ", column " + std::to_string(col) + ": " + m),
        line(ln), column(col) {}
  int line;
  int column;
};

}  // namespace fdyn

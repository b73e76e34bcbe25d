#pragma once

#include <stdexcept>
#include <string>

namespace panicfix {

/// Base class for all tool-level failures. Each module throws a named
/// subclass so the CLI can tag diagnostics with the failing stage.
class Error : public std::runtime_error {
public:
  Error(std::string module, const std::string& what)
      : std::runtime_error(what), module_(std::move(module)) {}

  const std::string& module() const { return module_; }

private:
  std::string module_;
};

struct MalformedBacktrace : Error {
  explicit MalformedBacktrace(const std::string& what) : Error("panic-report", what) {}
};

struct NoProjectLocation : Error {
  explicit NoProjectLocation(const std::string& what) : Error("panic-report", what) {}
};

struct EmptyProject : Error {
  explicit EmptyProject(const std::string& what) : Error("source-model", what) {}
};

struct UnknownFile : Error {
  explicit UnknownFile(const std::string& what) : Error("source-model", what) {}
};

struct InvalidLambda : Error {
  explicit InvalidLambda(const std::string& what) : Error("localization", what) {}
};

struct InvalidDepth : Error {
  explicit InvalidDepth(const std::string& what) : Error("localization", what) {}
};

struct CatalogSchemaError : Error {
  explicit CatalogSchemaError(const std::string& what) : Error("pattern-catalog", what) {}
};

struct UnsynthesizableBinding : Error {
  explicit UnsynthesizableBinding(const std::string& what) : Error("patch-engine", what) {}
};

struct OverlappingEdits : Error {
  explicit OverlappingEdits(const std::string& what) : Error("patch-engine", what) {}
};

struct MissingSlot : Error {
  explicit MissingSlot(const std::string& what) : Error("patch-engine", what) {}
};

struct ToolchainUnavailable : Error {
  explicit ToolchainUnavailable(const std::string& what) : Error("validation", what) {}
};

struct TriggerDoesNotPanic : Error {
  explicit TriggerDoesNotPanic(const std::string& what) : Error("cli", what) {}
};

struct MalformedDiff : Error {
  explicit MalformedDiff(const std::string& what) : Error("cli", what) {}
};

}  // namespace panicfix

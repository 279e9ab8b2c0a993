#pragma once

#include <stdexcept>
#include <string>

namespace infdecomp {

// Base for every error raised by the library. Module-specific subclasses let
// callers (and the CLI's exit-code mapping) distinguish failure classes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CorpusError : public Error {
 public:
  using Error::Error;
};

class PromptError : public Error {
 public:
  using Error::Error;
};

// Network or server failure that survived the retry budget.
class TransportError : public Error {
 public:
  using Error::Error;
};

class EmptyCompletionError : public Error {
 public:
  using Error::Error;
};

class EmptyDecompositionError : public Error {
 public:
  using Error::Error;
};

class EmbeddingError : public Error {
 public:
  using Error::Error;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

class ClusterError : public Error {
 public:
  using Error::Error;
};

class TopicError : public Error {
 public:
  using Error::Error;
};

class CovoteError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace infdecomp

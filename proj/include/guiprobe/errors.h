// Copyright 2026 The guiprobe Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GUIPROBE_ERRORS_H_
#define GUIPROBE_ERRORS_H_

#include <stdexcept>
#include <string>
#include <utility>

namespace guiprobe {

// Base class for every fault raised by the library. Conditions that are
// expected outcomes (parse failures, validation violations) are returned as
// data instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CoordinateRangeError : public Error {
 public:
  CoordinateRangeError(char axis, const std::string& message)
      : Error(message), axis_(axis) {}
  char axis() const { return axis_; }

 private:
  char axis_;
};

class ImageError : public Error {
 public:
  using Error::Error;
};

class LoadError : public Error {
 public:
  using Error::Error;
};

class EmptySubsetError : public Error {
 public:
  using Error::Error;
};

class PerturbationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  TransportError(std::string sample_id, int attempts, const std::string& message)
      : Error(message), sample_id_(std::move(sample_id)), attempts_(attempts) {}
  const std::string& sample_id() const { return sample_id_; }
  int attempts() const { return attempts_; }

 private:
  std::string sample_id_;
  int attempts_;
};

}  // namespace guiprobe

#endif  // GUIPROBE_ERRORS_H_

/*
 * Copyright 2026 The LanForge Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace lanforge {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed document. `location` is a byte offset or a JSON pointer.
class ParseError : public Error {
public:
    ParseError(std::string location, const std::string& message)
        : Error(location.empty() ? message : location + ": " + message),
          location_(std::move(location)) {}
    const std::string& location() const noexcept { return location_; }

private:
    std::string location_;
};

class SchemaVersionError : public Error {
public:
    explicit SchemaVersionError(long long found)
        : Error("unsupported schema version " + std::to_string(found)), found_(found) {}
    long long found() const noexcept { return found_; }

private:
    long long found_;
};

class CycleError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Raised when a cancellation token fires during a backend call.
class AbortedError : public Error {
public:
    AbortedError() : Error("operation aborted") {}
};

class OracleExhaustedError : public Error {
public:
    explicit OracleExhaustedError(std::size_t calls)
        : Error("scripted backend exhausted after " + std::to_string(calls) + " calls") {}
};

class ReplayMismatchError : public Error {
public:
    /// `index` is 1-based.
    ReplayMismatchError(std::size_t index, std::string diff)
        : Error("replay diverged at request " + std::to_string(index) + "\n" + diff),
          index_(index), diff_(std::move(diff)) {}
    std::size_t index() const noexcept { return index_; }
    const std::string& diff() const noexcept { return diff_; }

private:
    std::size_t index_;
    std::string diff_;
};

class PromptTooLongError : public Error {
public:
    PromptTooLongError(std::size_t length, std::size_t limit)
        : Error("prompt of " + std::to_string(length) + " bytes exceeds limit of " +
                std::to_string(limit)) {}
};

/// A model answer never matched its template within the repair budget.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::vector<std::string> attempts)
        : Error(what), attempts_(std::move(attempts)) {}
    const std::vector<std::string>& attempts() const noexcept { return attempts_; }

private:
    std::vector<std::string> attempts_;
};

/// A pipeline step produced a result that violates its post-condition.
class RejectedStepError : public Error {
public:
    using Error::Error;
};

class UnknownReasonType : public Error {
public:
    explicit UnknownReasonType(const std::string& value)
        : Error("unknown reason_type '" + value + "'"), value_(value) {}
    const std::string& value() const noexcept { return value_; }

private:
    std::string value_;
};

class PlanValidationError : public Error {
public:
    explicit PlanValidationError(std::vector<std::string> violations)
        : Error(join(violations)), violations_(std::move(violations)) {}
    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string out = "invalid strategy plan";
        for (const auto& s : v) out += "\n  - " + s;
        return out;
    }
    std::vector<std::string> violations_;
};

class MergeError : public Error {
public:
    using Error::Error;
};

class IterationCapReached : public Error {
public:
    explicit IterationCapReached(int cap)
        : Error("iteration cap of " + std::to_string(cap) + " reached"), cap_(cap) {}
    int cap() const noexcept { return cap_; }

private:
    int cap_;
};

class StorageError : public Error {
public:
    StorageError(std::string path, const std::string& message)
        : Error(path + ": " + message), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

}  // namespace lanforge

// Copyright 2026 The SmoothCLAP Authors.
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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace smoothclap {

enum class ErrorCode {
  // numeric-core
  ZeroRow,
  NonPositiveTemperature,
  ShapeMismatch,
  EmptyInput,
  NonFinite,
  NotRowStochastic,
  // objective
  GammaOutOfRange,
  BetaOutOfRange,
  NotSquare,
  ZeroMassTarget,
  InvalidConfig,
  // paralinguistics
  UnsupportedFormat,
  CorruptHeader,
  EmptyAudio,
  SignalTooShort,
  TooShort,
  // tagging
  TooFewValues,
  NonFiniteValue,
  MissingThresholds,
  UnknownLabel,
  // trainer
  EmptyVocabulary,
  InsufficientData,
  NonFiniteLoss,
  // evaluation
  LabelOutOfRange,
  LengthMismatch,
  RaggedRows,
  NonNumericCell,
  DuplicateId,
  UnknownQueryLabel,
  // io
  IoError,
  ParseError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ZeroRow: return "ZeroRow";
    case ErrorCode::NonPositiveTemperature: return "NonPositiveTemperature";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NotRowStochastic: return "NotRowStochastic";
    case ErrorCode::GammaOutOfRange: return "GammaOutOfRange";
    case ErrorCode::BetaOutOfRange: return "BetaOutOfRange";
    case ErrorCode::NotSquare: return "NotSquare";
    case ErrorCode::ZeroMassTarget: return "ZeroMassTarget";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::CorruptHeader: return "CorruptHeader";
    case ErrorCode::EmptyAudio: return "EmptyAudio";
    case ErrorCode::SignalTooShort: return "SignalTooShort";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::TooFewValues: return "TooFewValues";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::MissingThresholds: return "MissingThresholds";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::EmptyVocabulary: return "EmptyVocabulary";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::RaggedRows: return "RaggedRows";
    case ErrorCode::NonNumericCell: return "NonNumericCell";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::UnknownQueryLabel: return "UnknownQueryLabel";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// Every failure in the library surfaces as this exception; `code()` lets
/// callers (and tests) dispatch on the failure class without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace smoothclap

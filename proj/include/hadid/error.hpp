#pragma once

#include <stdexcept>
#include <string>

namespace hadid {

// Error conditions surfaced by the library. The CLI maps these onto exit
// codes; tests match on the code rather than the message text.
enum class Errc {
    // audio
    MissingFile,
    UnsupportedFormat,
    CorruptHeader,
    EmptyAfterTrim,
    // pitch
    BandTooNarrow,
    BufferTooShort,
    NonPositiveFrequency,
    // segmentation
    InvalidBand,
    NoNuclei,
    // prosody
    TooFewSegments,
    NoVoicedNucleus,
    UnusableUtterance,
    // stats
    DegenerateInput,
    EmptyGroup,
    // neuralnet
    InvalidTopology,
    DimensionMismatch,
    InvalidTarget,
    SingleClassData,
    NonFiniteLoss,
    // hierarchy
    CycleDetected,
    DuplicateLabel,
    UnaryNode,
    UnknownLabel,
    EmptyDataset,
    UntrainedModel,
    // evaluation
    LengthMismatch,
    PathNotInTree,
    TooFewSpeakers,
    // corpus
    DuplicateUtteranceId,
    MissingColumn,
    UnknownDialect,
    IoError,
    // config / misc
    InvalidConfig,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
  public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message),
          code_(code),
          reason_(code) {}

    // For wrapper errors (UnusableUtterance) that carry the underlying cause.
    Error(Errc code, Errc reason, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + "(" + errc_name(reason) + "): " + message),
          code_(code),
          reason_(reason) {}

    Errc code() const noexcept { return code_; }
    Errc reason() const noexcept { return reason_; }

  private:
    Errc code_;
    Errc reason_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace hadid

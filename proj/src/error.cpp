#include "hadid/error.hpp"

namespace hadid {

const char* errc_name(Errc code) {
    switch (code) {
        case Errc::MissingFile: return "MissingFile";
        case Errc::UnsupportedFormat: return "UnsupportedFormat";
        case Errc::CorruptHeader: return "CorruptHeader";
        case Errc::EmptyAfterTrim: return "EmptyAfterTrim";
        case Errc::BandTooNarrow: return "BandTooNarrow";
        case Errc::BufferTooShort: return "BufferTooShort";
        case Errc::NonPositiveFrequency: return "NonPositiveFrequency";
        case Errc::InvalidBand: return "InvalidBand";
        case Errc::NoNuclei: return "NoNuclei";
        case Errc::TooFewSegments: return "TooFewSegments";
        case Errc::NoVoicedNucleus: return "NoVoicedNucleus";
        case Errc::UnusableUtterance: return "UnusableUtterance";
        case Errc::DegenerateInput: return "DegenerateInput";
        case Errc::EmptyGroup: return "EmptyGroup";
        case Errc::InvalidTopology: return "InvalidTopology";
        case Errc::DimensionMismatch: return "DimensionMismatch";
        case Errc::InvalidTarget: return "InvalidTarget";
        case Errc::SingleClassData: return "SingleClassData";
        case Errc::NonFiniteLoss: return "NonFiniteLoss";
        case Errc::CycleDetected: return "CycleDetected";
        case Errc::DuplicateLabel: return "DuplicateLabel";
        case Errc::UnaryNode: return "UnaryNode";
        case Errc::UnknownLabel: return "UnknownLabel";
        case Errc::EmptyDataset: return "EmptyDataset";
        case Errc::UntrainedModel: return "UntrainedModel";
        case Errc::LengthMismatch: return "LengthMismatch";
        case Errc::PathNotInTree: return "PathNotInTree";
        case Errc::TooFewSpeakers: return "TooFewSpeakers";
        case Errc::DuplicateUtteranceId: return "DuplicateUtteranceId";
        case Errc::MissingColumn: return "MissingColumn";
        case Errc::UnknownDialect: return "UnknownDialect";
        case Errc::IoError: return "IoError";
        case Errc::InvalidConfig: return "InvalidConfig";
    }
    return "UnknownError";
}

}  // namespace hadid

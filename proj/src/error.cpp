#include "packetlm/error.hpp"

namespace packetlm {

const char* errc_name(Errc c) {
    switch (c) {
    case Errc::unknown_category: return "UnknownCategory";
    case Errc::negative_value: return "NegativeValue";
    case Errc::overflow: return "Overflow";
    case Errc::bad_number: return "BadNumber";
    case Errc::sequence_too_long: return "SequenceTooLong";
    case Errc::label_out_of_range: return "LabelOutOfRange";
    case Errc::malformed_sequence: return "MalformedSequence";
    case Errc::schema_error: return "SchemaError";
    case Errc::config_error: return "ConfigError";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::index_out_of_range: return "IndexOutOfRange";
    case Errc::empty_mask: return "EmptyMask";
    case Errc::non_finite_gradient: return "NonFiniteGradient";
    case Errc::io_failure: return "IoFailure";
    case Errc::version_mismatch: return "VersionMismatch";
    case Errc::corrupt_tensor: return "CorruptTensor";
    case Errc::missing_column: return "MissingColumn";
    case Errc::empty_file: return "EmptyFile";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::insufficient_samples: return "InsufficientSamples";
    case Errc::schema_mismatch: return "SchemaMismatch";
    }
    return "UnknownError";
}

Error::Error(Errc code, const std::string& msg)
    : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

void fail(Errc code, const std::string& msg) {
    throw Error(code, msg);
}

} // namespace packetlm

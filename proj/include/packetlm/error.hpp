#pragma once

#include <stdexcept>
#include <string>

namespace packetlm {

// Every failure the library can report, shared across modules so callers
// (and the CLI exit-code mapping) can switch on one enum.
enum class Errc {
    // field normalization / tokenization
    unknown_category,
    negative_value,
    overflow,
    bad_number,
    sequence_too_long,
    label_out_of_range,
    malformed_sequence,
    // schema / config validation
    schema_error,
    config_error,
    // model
    shape_mismatch,
    index_out_of_range,
    empty_mask,
    // training / checkpoints
    non_finite_gradient,
    io_failure,
    version_mismatch,
    corrupt_tensor,
    // datasets
    missing_column,
    empty_file,
    length_mismatch,
    insufficient_samples,
    // cli / pipeline
    schema_mismatch,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& msg);
    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& msg);

} // namespace packetlm

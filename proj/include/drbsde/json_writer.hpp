#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace drbsde {

/// Fixed-significant-digit text for doubles: every value is written with 17
/// significant digits so emitted files round-trip bit-exactly and reruns are
/// byte-identical.
std::string format_double(double v);

/// Minimal streaming JSON writer with insertion-ordered keys.
class JsonWriter {
public:
    JsonWriter& begin_object();
    JsonWriter& end_object();
    JsonWriter& begin_array();
    JsonWriter& end_array();
    JsonWriter& key(std::string_view k);
    JsonWriter& number(double v);
    JsonWriter& integer(std::int64_t v);
    JsonWriter& unsigned_integer(std::uint64_t v);
    JsonWriter& boolean(bool v);
    JsonWriter& string(std::string_view v);

    const std::string& str() const { return out_; }

private:
    void maybe_comma();
    std::string out_;
    std::vector<bool> first_in_scope_;
    bool after_key_ = false;
};

}  // namespace drbsde

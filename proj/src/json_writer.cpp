#include "drbsde/json_writer.hpp"

#include <cstdio>

namespace drbsde {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void JsonWriter::maybe_comma() {
    if (after_key_) {
        after_key_ = false;
        return;
    }
    if (!first_in_scope_.empty()) {
        if (!first_in_scope_.back()) out_ += ',';
        first_in_scope_.back() = false;
    }
}

JsonWriter& JsonWriter::begin_object() {
    maybe_comma();
    out_ += '{';
    first_in_scope_.push_back(true);
    return *this;
}

JsonWriter& JsonWriter::end_object() {
    out_ += '}';
    first_in_scope_.pop_back();
    return *this;
}

JsonWriter& JsonWriter::begin_array() {
    maybe_comma();
    out_ += '[';
    first_in_scope_.push_back(true);
    return *this;
}

JsonWriter& JsonWriter::end_array() {
    out_ += ']';
    first_in_scope_.pop_back();
    return *this;
}

JsonWriter& JsonWriter::key(std::string_view k) {
    maybe_comma();
    out_ += '"';
    out_ += k;
    out_ += "\":";
    after_key_ = true;
    return *this;
}

JsonWriter& JsonWriter::number(double v) {
    maybe_comma();
    out_ += format_double(v);
    return *this;
}

JsonWriter& JsonWriter::integer(std::int64_t v) {
    maybe_comma();
    out_ += std::to_string(v);
    return *this;
}

JsonWriter& JsonWriter::unsigned_integer(std::uint64_t v) {
    maybe_comma();
    out_ += std::to_string(v);
    return *this;
}

JsonWriter& JsonWriter::boolean(bool v) {
    maybe_comma();
    out_ += v ? "true" : "false";
    return *this;
}

JsonWriter& JsonWriter::string(std::string_view v) {
    maybe_comma();
    out_ += '"';
    for (char c : v) {
        if (c == '"' || c == '\\') out_ += '\\';
        out_ += c;
    }
    out_ += '"';
    return *this;
}

}  // namespace drbsde

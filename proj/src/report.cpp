#include "gexlab/report.hpp"

#include <algorithm>
#include <sstream>

#include "gexlab/extended.hpp"

namespace gexlab {

namespace {

std::string csv_field(const std::string& text) {
    if (text.find_first_of(",\"\n") == std::string::npos) return text;
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string number(double v) { return std::isnan(v) ? std::string() : format_real(v); }

}  // namespace

bool Report::passed() const {
    return std::all_of(rows_.begin(), rows_.end(), [](const CheckRow& r) { return r.pass; });
}

const CheckRow* Report::find(std::string_view check, std::string_view fixture) const {
    for (const auto& r : rows_)
        if (r.check == check && (fixture.empty() || r.fixture == fixture)) return &r;
    return nullptr;
}

std::string Report::to_csv() const {
    std::ostringstream out;
    out << "check,fixture,value,reference,tolerance,pass\n";
    for (const auto& r : rows_)
        out << csv_field(r.check) << ',' << csv_field(r.fixture) << ',' << number(r.value) << ','
            << number(r.reference) << ',' << number(r.tolerance) << ',' << (r.pass ? "true" : "false")
            << '\n';
    return out.str();
}

std::string Report::summary() const {
    std::ostringstream out;
    for (const auto& r : rows_) {
        out << (r.pass ? "PASS " : "FAIL ") << r.check << " [" << r.fixture << "] value=" << number(r.value);
        if (!std::isnan(r.reference)) out << " reference=" << number(r.reference);
        if (r.tolerance > 0.0) out << " tol=" << number(r.tolerance);
        if (!r.note.empty()) out << "  (" << r.note << ")";
        out << '\n';
    }
    out << (passed() ? "OVERALL PASS" : "OVERALL FAIL") << " (" << rows_.size() << " checks)\n";
    return out.str();
}

}  // namespace gexlab

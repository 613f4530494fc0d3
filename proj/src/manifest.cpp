#include "pcg/manifest.hpp"
#include "pcg/error.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

namespace pcg {

namespace {

const char* kHeader =
    "path,quality_score,outcome_label,sex,age_group,height_cm,weight_kg,pregnant,split_tag";

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    cells.push_back(cur);
    return cells;
}

Sex parse_sex(const std::string& s) {
    if (s.empty()) return Sex::missing;
    if (s == "F" || s == "female") return Sex::female;
    if (s == "M" || s == "male") return Sex::male;
    throw PcgError("BadLabel", "sex: " + s);
}

AgeGroup parse_age(const std::string& s) {
    if (s.empty()) return AgeGroup::missing;
    if (s == "neonate") return AgeGroup::neonate;
    if (s == "infant") return AgeGroup::infant;
    if (s == "child") return AgeGroup::child;
    if (s == "adolescent") return AgeGroup::adolescent;
    throw PcgError("BadLabel", "age_group: " + s);
}

Tristate parse_bool(const std::string& s) {
    if (s.empty()) return Tristate::missing;
    if (s == "true") return Tristate::yes;
    if (s == "false") return Tristate::no;
    throw PcgError("BadLabel", "pregnant: " + s);
}

} // namespace

std::string to_string(Sex s) {
    switch (s) {
        case Sex::female: return "F";
        case Sex::male: return "M";
        default: return "";
    }
}

std::string to_string(AgeGroup a) {
    switch (a) {
        case AgeGroup::neonate: return "neonate";
        case AgeGroup::infant: return "infant";
        case AgeGroup::child: return "child";
        case AgeGroup::adolescent: return "adolescent";
        default: return "";
    }
}

std::string to_string(Outcome o) {
    return o == Outcome::normal ? "normal" : "abnormal";
}

Manifest read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw PcgError("FileNotFound", path);

    std::string line;
    if (!std::getline(in, line)) throw PcgError("MissingColumn", path + ": empty file");
    // tolerate a trailing \r
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line != kHeader)
        throw PcgError("MissingColumn", path + ": header must be exactly \"" + kHeader + "\"");

    Manifest m;
    std::unordered_set<std::string> seen;
    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto cells = split_csv_line(line);
        if (cells.size() != 9)
            throw PcgError("MissingColumn",
                           path + ":" + std::to_string(lineno) + ": expected 9 cells, got " +
                               std::to_string(cells.size()));
        ManifestRow row;
        row.path = cells[0];
        if (row.path.empty())
            throw PcgError("BadLabel", path + ":" + std::to_string(lineno) + ": empty path");
        if (!seen.insert(row.path).second)
            throw PcgError("DuplicatePath", path + ": " + row.path);
        if (!cells[1].empty()) {
            int score = 0;
            try {
                score = std::stoi(cells[1]);
            } catch (...) {
                throw PcgError("BadScore", cells[1]);
            }
            if (score < 1 || score > 5) throw PcgError("BadScore", cells[1]);
            row.quality_score = score;
        }
        if (!cells[2].empty()) {
            if (cells[2] == "normal") row.outcome_label = Outcome::normal;
            else if (cells[2] == "abnormal") row.outcome_label = Outcome::abnormal;
            else throw PcgError("BadLabel", "outcome_label: " + cells[2]);
        }
        row.demographics.sex = parse_sex(cells[3]);
        row.demographics.age_group = parse_age(cells[4]);
        if (!cells[5].empty()) {
            double h = std::stod(cells[5]);
            if (h <= 0) throw PcgError("BadLabel", "height_cm must be positive");
            row.demographics.height_cm = h;
        }
        if (!cells[6].empty()) {
            double w = std::stod(cells[6]);
            if (w <= 0) throw PcgError("BadLabel", "weight_kg must be positive");
            row.demographics.weight_kg = w;
        }
        row.demographics.pregnant = parse_bool(cells[7]);
        row.split_tag = cells[8];
        m.rows.push_back(std::move(row));
    }
    return m;
}

void write_manifest(const Manifest& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw PcgError("IoError", "cannot write " + path);
    out << kHeader << "\n";
    for (const auto& row : m.rows) {
        out << row.path << ',';
        if (row.quality_score) out << *row.quality_score;
        out << ',';
        if (row.outcome_label) out << to_string(*row.outcome_label);
        out << ',' << to_string(row.demographics.sex) << ',' << to_string(row.demographics.age_group)
            << ',';
        if (row.demographics.height_cm) out << *row.demographics.height_cm;
        out << ',';
        if (row.demographics.weight_kg) out << *row.demographics.weight_kg;
        out << ',';
        if (row.demographics.pregnant != Tristate::missing)
            out << (row.demographics.pregnant == Tristate::yes ? "true" : "false");
        out << ',' << row.split_tag << "\n";
    }
    if (!out) throw PcgError("IoError", "write failed: " + path);
}

} // namespace pcg

#pragma once

#include <optional>
#include <string>
#include <vector>

namespace pcg {

enum class Sex { female, male, missing };
enum class AgeGroup { neonate, infant, child, adolescent, missing };
enum class Tristate { no, yes, missing };

struct DemographicRecord {
    Sex sex = Sex::missing;
    AgeGroup age_group = AgeGroup::missing;
    std::optional<double> height_cm;
    std::optional<double> weight_kg;
    Tristate pregnant = Tristate::missing;
};

enum class Outcome { normal, abnormal };

struct ManifestRow {
    std::string path;
    std::optional<int> quality_score; // 1..5
    std::optional<Outcome> outcome_label;
    DemographicRecord demographics;
    std::string split_tag; // empty = unset
};

struct Manifest {
    std::vector<ManifestRow> rows;
};

// CSV with fixed header:
//   path,quality_score,outcome_label,sex,age_group,height_cm,weight_kg,pregnant,split_tag
// Empty cell = missing. Throws MissingColumn / BadScore / BadLabel / DuplicatePath.
Manifest read_manifest(const std::string& path);
void write_manifest(const Manifest& m, const std::string& path);

std::string to_string(Sex s);
std::string to_string(AgeGroup a);
std::string to_string(Outcome o);

} // namespace pcg

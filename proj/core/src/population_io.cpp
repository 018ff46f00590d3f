#include "microsa/error.hpp"
#include "microsa/population.hpp"

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace microsa {

namespace {

constexpr std::string_view population_header = "# microsa-population v1";

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, sep)) {
        out.push_back(field);
    }
    if (!line.empty() && line.back() == sep) {
        out.emplace_back();
    }
    return out;
}

long long to_int(const std::string& s, int line_no) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(s, &used);
        if (used != s.size()) {
            throw std::invalid_argument(s);
        }
        return v;
    } catch (const std::exception&) {
        throw ConfigError("population file line " + std::to_string(line_no) + ": bad integer '" + s + "'");
    }
}

bool to_bool(const std::string& s, int line_no) {
    if (s == "1") {
        return true;
    }
    if (s == "0") {
        return false;
    }
    throw ConfigError("population file line " + std::to_string(line_no) + ": bad flag '" + s + "'");
}

} // namespace

void write_population(std::ostream& out, const Population& pop) {
    out << population_header << '\n';
    out << "year\t" << pop.year() << '\n';
    out << "next_ids\t" << pop.next_person_id() << '\t' << pop.next_household_id() << '\n';
    for (const auto& d : pop.districts()) {
        out << "D\t" << d.district_id << '\t' << d.name << '\t' << d.target_size << '\n';
    }
    for (const auto& h : pop.households()) {
        out << "H\t" << h.household_id << '\t' << h.district_id << '\t';
        for (std::size_t i = 0; i < h.member_ids.size(); ++i) {
            out << (i ? "," : "") << h.member_ids[i];
        }
        out << '\n';
    }
    for (const auto& p : pop.individuals()) {
        out << "P\t" << p.person_id << '\t' << p.household_id << '\t' << p.district_id << '\t' << to_string(p.sex)
            << '\t' << p.age << '\t' << to_string(p.employment) << '\t' << to_string(p.education) << '\t'
            << to_string(p.citizenship) << '\t' << int{p.immigrant} << '\t' << p.years_since_immigration << '\t'
            << to_string(p.care_status) << '\t' << to_string(p.partnership) << '\t' << p.partner_id << '\t'
            << int{p.birth_event_this_period} << '\t' << int{p.alive} << '\n';
    }
}

Population read_population(std::istream& in) {
    std::string line;
    int line_no = 0;
    if (!std::getline(in, line) || line != population_header) {
        throw ConfigError("not a microsa population file (missing '" + std::string(population_header) + "')");
    }
    ++line_no;
    int year = 0;
    PersonId next_person = 0;
    HouseholdId next_household = 0;
    std::vector<District> districts;
    std::vector<Household> households;
    std::vector<Individual> individuals;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const auto f = split(line, '\t');
        const std::string& tag = f[0];
        auto need = [&](std::size_t n) {
            if (f.size() != n) {
                throw ConfigError("population file line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(n) + " fields");
            }
        };
        if (tag == "year") {
            need(2);
            year = static_cast<int>(to_int(f[1], line_no));
        } else if (tag == "next_ids") {
            need(3);
            next_person = to_int(f[1], line_no);
            next_household = to_int(f[2], line_no);
        } else if (tag == "D") {
            need(4);
            districts.push_back(District{static_cast<DistrictId>(to_int(f[1], line_no)), f[2], to_int(f[3], line_no)});
        } else if (tag == "H") {
            need(4);
            Household h;
            h.household_id = to_int(f[1], line_no);
            h.district_id = static_cast<DistrictId>(to_int(f[2], line_no));
            for (const auto& m : split(f[3], ',')) {
                if (!m.empty()) {
                    h.member_ids.push_back(to_int(m, line_no));
                }
            }
            households.push_back(std::move(h));
        } else if (tag == "P") {
            need(16);
            Individual p;
            p.person_id = to_int(f[1], line_no);
            p.household_id = to_int(f[2], line_no);
            p.district_id = static_cast<DistrictId>(to_int(f[3], line_no));
            p.sex = parse_sex(f[4]);
            p.age = static_cast<int>(to_int(f[5], line_no));
            p.employment = parse_employment(f[6]);
            p.education = parse_education(f[7]);
            p.citizenship = parse_citizenship(f[8]);
            p.immigrant = to_bool(f[9], line_no);
            p.years_since_immigration = static_cast<int>(to_int(f[10], line_no));
            p.care_status = parse_care_status(f[11]);
            p.partnership = parse_partnership(f[12]);
            p.partner_id = to_int(f[13], line_no);
            p.birth_event_this_period = to_bool(f[14], line_no);
            p.alive = to_bool(f[15], line_no);
            individuals.push_back(p);
        } else {
            throw ConfigError("population file line " + std::to_string(line_no) + ": unknown record '" + tag + "'");
        }
    }
    return Population::from_parts(year, std::move(districts), std::move(individuals), std::move(households),
                                  next_person, next_household);
}

void save_population(const std::string& path, const Population& pop) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot write population file " + path);
    }
    write_population(out, pop);
}

Population load_population(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot read population file " + path);
    }
    return read_population(in);
}

} // namespace microsa

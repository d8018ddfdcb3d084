#include "bsym/run_io.hpp"

#include <chrono>
#include <fstream>

#include "bsym/errors.hpp"

namespace bsym {

nlohmann::json system_to_json(const NCBSystem& sys) {
    nlohmann::json jints = nlohmann::json::array();
    for (const BFunction& f : sys.integrals()) jints.push_back(f.to_json());
    return nlohmann::json{{"schema", 1},
                          {"chart", sys.chart().to_json()},
                          {"omega", sys.structure().omega().to_json()},
                          {"integrals", jints},
                          {"rank", sys.rank()}};
}

NCBSystem system_from_json(const nlohmann::json& j) {
    try {
        Chart chart = Chart::from_json(j.at("chart"));
        BForm omega = BForm::from_json(j.at("omega"), chart);
        std::vector<BFunction> integrals;
        for (const auto& ji : j.at("integrals"))
            integrals.push_back(BFunction::from_json(ji, chart.box()));
        const int rank = j.at("rank").get<int>();
        return NCBSystem(BSymplecticStructure(chart, std::move(omega)), std::move(integrals), rank);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("system_from_json: ") + e.what());
    }
}

NCBSystem load_system_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("malformed JSON in " + path.string() + ": " + e.what());
    }
    return system_from_json(j);
}

void save_system_file(const NCBSystem& sys, const std::filesystem::path& path) {
    write_report(system_to_json(sys), path);
}

void write_report(const nlohmann::json& report, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw DomainError("cannot write " + path.string());
    out << report.dump(2) << "\n";
}

void write_run_meta(const std::filesystem::path& path, const std::string& command) {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char buf[64];
    std::strftime(buf, sizeof buf, "%FT%TZ", std::gmtime(&tt));
    write_report(nlohmann::json{{"command", command}, {"timestamp", buf}}, path);
}

} // namespace bsym

#include "cmsc/experiment.hpp"

#include <cinttypes>
#include <cstdio>

namespace cmsc {

PipelineConfig ExperimentConfig::pipeline() const {
    PipelineConfig pc;
    pc.scene = scene;
    pc.render = render;
    pc.num_cavs = num_cavs;
    return pc;
}

namespace {

std::vector<Modality> parse_cav_modalities(const std::string& s) {
    if (s == "random") return {};
    std::vector<Modality> out;
    size_t start = 0;
    while (start <= s.size()) {
        size_t comma = s.find(',', start);
        if (comma == std::string::npos) comma = s.size();
        out.push_back(modality_from_name(s.substr(start, comma - start)));
        start = comma + 1;
        if (comma == s.size()) break;
    }
    check(!out.empty(), "cav_modalities: empty list");
    return out;
}

std::string modalities_label(const std::vector<Modality>& ms) {
    if (ms.empty()) return "random";
    std::string out;
    for (size_t i = 0; i < ms.size(); ++i) {
        if (i) out += "+";
        out += modality_name(ms[i]);
    }
    return out;
}

ResultRow make_row(const ExperimentConfig& cfg, const EvalPoint& pt, const SceneScore& score) {
    ResultRow row;
    row.method = method_name(pt.method);
    row.channel = channel_model_name(pt.channel);
    row.snr_db = pt.snr_db;
    row.lambda = pt.lambda;
    row.ego_modality = pt.ego_random ? "random" : modality_name(pt.ego);
    row.cav_modalities = modalities_label(pt.cavs);
    row.ap50 = score.ap50;
    row.ap70 = score.ap70;
    row.channel_uses = method_channel_uses(pt.method, cfg.render.grid_h, cfg.render.grid_w,
                                           cfg.render.channels, pt.lambda);
    row.seed = cfg.seed;
    row.scenes = cfg.scenes;
    return row;
}

}  // namespace

EvalPoint ExperimentConfig::base_point(Method m) const {
    EvalPoint pt;
    pt.method = m;
    pt.channel = channel;
    pt.lambda = lambda;
    if (ego_modality == "random")
        pt.ego_random = true;
    else
        pt.ego = modality_from_name(ego_modality);
    pt.cavs = parse_cav_modalities(cav_modalities);
    return pt;
}

std::vector<ResultRow> run_sensor_matrix(CmscModels& models, const ExperimentConfig& cfg) {
    check(cfg.scenes > 0, "run_sensor_matrix: scene count must be positive");
    check(!cfg.snrs.empty(), "run_sensor_matrix: need an SNR");
    const PipelineConfig pc = cfg.pipeline();
    const Modality kEgo[4] = {Modality::Lidar, Modality::Lidar, Modality::Camera,
                              Modality::Camera};
    const Modality kCav[4] = {Modality::Lidar, Modality::Camera, Modality::Camera,
                              Modality::Lidar};
    std::vector<ResultRow> rows;
    for (int i = 0; i < 4; ++i) {
        EvalPoint pt = cfg.base_point(Method::Cmsc);
        pt.snr_db = cfg.snrs.front();
        pt.ego_random = false;
        pt.ego = kEgo[i];
        pt.cavs.assign(static_cast<size_t>(cfg.num_cavs), kCav[i]);
        rows.push_back(make_row(cfg, pt, evaluate_point(models, pc, pt, cfg.seed, cfg.scenes)));
    }
    return rows;
}

std::vector<ResultRow> run_snr_sweep(CmscModels& models, const ExperimentConfig& cfg) {
    check(cfg.scenes > 0, "run_snr_sweep: scene count must be positive");
    const PipelineConfig pc = cfg.pipeline();
    std::vector<ResultRow> rows;
    for (Method m : cfg.methods) {
        for (double snr : cfg.snrs) {
            EvalPoint pt = cfg.base_point(m);
            pt.snr_db = snr;
            if (m == Method::Baseline16Qam) pt.lambda = parity_lambda(cfg.lambda, 0.5, 16);
            if (m == Method::Baseline256Qam) pt.lambda = parity_lambda(cfg.lambda, 0.5, 256);
            rows.push_back(
                make_row(cfg, pt, evaluate_point(models, pc, pt, cfg.seed, cfg.scenes)));
        }
    }
    return rows;
}

std::vector<ResultRow> run_lambda_sweep(CmscModels& models, const ExperimentConfig& cfg) {
    check(cfg.scenes > 0, "run_lambda_sweep: scene count must be positive");
    const PipelineConfig pc = cfg.pipeline();
    std::vector<ResultRow> rows;
    for (double lambda : cfg.lambdas) {
        check(lambda > 0 && lambda <= 1, "run_lambda_sweep: lambda outside (0, 1]");
        for (double snr : cfg.lambda_snrs) {
            EvalPoint pt = cfg.base_point(Method::Cmsc);
            pt.lambda = lambda;
            pt.snr_db = snr;
            rows.push_back(
                make_row(cfg, pt, evaluate_point(models, pc, pt, cfg.seed, cfg.scenes)));
        }
    }
    return rows;
}

std::string rows_to_csv(const std::vector<ResultRow>& rows) {
    check(!rows.empty(), "emit_csv: no rows");
    std::string out =
        "method,channel,snr_db,lambda,ego_modality,cav_modalities,ap50,ap70,channel_uses,seed,"
        "scenes\n";
    char line[512];
    for (const ResultRow& r : rows) {
        std::snprintf(line, sizeof(line), "%s,%s,%g,%g,%s,%s,%.4f,%.4f,%.2f,%" PRIu64 ",%d\n",
                      r.method.c_str(), r.channel.c_str(), r.snr_db, r.lambda,
                      r.ego_modality.c_str(), r.cav_modalities.c_str(), r.ap50, r.ap70,
                      r.channel_uses, r.seed, r.scenes);
        out += line;
    }
    return out;
}

void emit_csv(const std::vector<ResultRow>& rows, const std::string& path) {
    const std::string text = rows_to_csv(rows);
    std::FILE* f = std::fopen(path.c_str(), "wb");
    check(f != nullptr, "emit_csv: cannot open '" + path + "' for writing");
    const bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
    std::fclose(f);
    check(ok, "emit_csv: short write to '" + path + "'");
}

}  // namespace cmsc

#pragma once

// Command-line front end. Exit codes: 0 success, 2 usage error, 3 data or
// format error. Every subcommand is deterministic for fixed inputs.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <ostream>
#include <string>

#include <CLI11.hpp>

#include "pano/pano.hpp"

namespace pano::cli {

inline constexpr const char* kToolName = "panogeo";
inline constexpr const char* kVersion = "0.1.0";
inline constexpr double kGradCheckStep = 1e-6;

enum ExitCode : int { kOk = 0, kUsage = 2, kData = 3 };

namespace detail {

using io::Json;

inline Json report_header(const std::string& command) {
    Json j = Json::object();
    j["tool"] = kToolName;
    j["version"] = kVersion;
    j["command"] = command;
    return j;
}

inline void emit(const Json& report, const std::string& target, std::ostream& out) {
    const std::string text = io::canonical_dump(report);
    if (target == "-") {
        out << text;
        return;
    }
    io::write_file(target, std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

inline Json matrix_json(const Matrix& m) {
    Json rows = Json::array();
    for (int r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        rows.push_back(Json(std::vector<double>(row.begin(), row.end())));
    }
    return rows;
}

inline std::string digest(const io::PfmImage& img) { return io::hex64(io::fnv1a64(img.payload)); }

inline std::string digest_doubles(std::span<const double> values) {
    std::vector<unsigned char> bytes;
    bytes.reserve(values.size() * 8);
    for (double v : values) {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<unsigned char>(bits >> (8 * i)));
    }
    return io::hex64(io::fnv1a64(bytes));
}

inline Json metrics_json(const MetricsReport& m) {
    return Json{{"abs_rel", m.abs_rel}, {"sq_rel", m.sq_rel},   {"rms_lin", m.rms_lin},
                {"rms_log", m.rms_log}, {"mae", m.mae},         {"delta1", m.delta1},
                {"delta2", m.delta2},   {"delta3", m.delta3},   {"valid_count", m.valid_count},
                {"log_valid_count", m.log_valid_count}};
}

inline Json loss_json(const LossReport& r) {
    return Json{{"l_pix", r.l_pix}, {"l_grad", r.l_grad}, {"l_total", r.l_total}, {"valid_count", r.valid_count}};
}

inline Json align_json(const AlignParams& a) { return Json{{"s", a.s}, {"t", a.t}}; }

inline double max_row_sum_error(const Matrix& weights) {
    double worst = 0.0;
    for (int r = 0; r < weights.rows(); ++r) {
        double total = 0.0;
        for (double w : weights.row(r)) total += w;
        worst = std::max(worst, std::abs(total - 1.0));
    }
    return worst;
}

inline Json tensor_summary(const ErpTensor& t) {
    double sum = 0.0, lo = t.data()[0], hi = t.data()[0];
    for (double v : t.data()) {
        sum += v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return Json{{"channels", t.channels()}, {"height", t.height()}, {"width", t.width()},
                {"sum", sum}, {"min", lo}, {"max", hi}, {"fnv1a64", digest_doubles(t.data())}};
}

inline Json run_attn_demo(const DemoConfig& cfg) {
    const DemoResult r = run_demo(cfg);

    double stochastic_error = max_row_sum_error(r.gcpe.global_attention);
    bool scales_match = true;
    Json gcpe = Json::array();
    for (int k = 0; k < kPyramidLevels; ++k) {
        stochastic_error = std::max(stochastic_error, max_row_sum_error(r.gcpe.query_attention[k]));
        scales_match = scales_match && r.gcpe.embeddings[k].shape() == r.model.pyramid.levels[k].shape();
        gcpe.push_back(tensor_summary(r.gcpe.embeddings[k]));
    }
    bool positive = true;
    for (double v : r.depth.data()) positive = positive && v > 0.0;

    Json j = report_header("attn-demo");
    j["params"] = Json{{"seed", cfg.seed}, {"height", cfg.height}, {"width", 2 * cfg.height},
                       {"window", cfg.window}, {"model_dim", cfg.model_dim}, {"heads", cfg.heads}};
    j["gcpe"] = gcpe;
    j["depth"] = tensor_summary(r.depth);
    j["checks"] = Json{{"depth_positive", positive},
                       {"depth_shape_ok", r.depth.height() == cfg.height && r.depth.width() == 2 * cfg.height},
                       {"gcpe_scales_match", scales_match},
                       {"attention_rows_stochastic", stochastic_error <= 1e-6},
                       {"attention_row_sum_max_error", stochastic_error}};
    return j;
}

}  // namespace detail

/// Parses `argv` and runs one subcommand. Reports go to `out` when the JSON
/// target is "-"; diagnostics go to `err`.
inline int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    using detail::Json;
    CLI::App app{"Spherical geometry kernels for 360-degree depth estimation", kToolName};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    std::string in_path, out_path, pred_path, gt_path, json_target = "-";
    bool inverse = false, align_first = false, grad_check = false;
    long long cols = 0;
    int height = 0, width = 0, window = 0, row = 0;
    std::uint64_t seed = 0;
    int demo_height = 64, demo_window = 8;

    auto* brp_cmd = app.add_subcommand("brp", "Bipolar re-projection of a PFM image (W must equal 2H)");
    brp_cmd->add_option("--in", in_path, "Input PFM")->required();
    brp_cmd->add_option("--out", out_path, "Output PFM")->required();
    brp_cmd->add_flag("--inverse", inverse, "Apply the inverse re-projection");

    auto* rotate_cmd = app.add_subcommand("rotate", "Circular column rotation of a PFM image");
    rotate_cmd->add_option("--in", in_path, "Input PFM")->required();
    rotate_cmd->add_option("--out", out_path, "Output PFM")->required();
    rotate_cmd->add_option("--cols", cols, "Columns to rotate by (modulo W)")->required();
    rotate_cmd->add_flag("--inverse", inverse, "Rotate back by --cols");

    auto* cle_cmd = app.add_subcommand("cle", "Dump the CLE distance table of one window row");
    cle_cmd->add_option("--height", height, "Grid height")->required();
    cle_cmd->add_option("--width", width, "Grid width")->required();
    cle_cmd->add_option("--window", window, "Window side N")->required();
    cle_cmd->add_option("--row", row, "Window row index")->required();
    cle_cmd->add_option("--json", json_target, "Output path or - for stdout");

    auto* gspe_cmd = app.add_subcommand("gspe", "Dump the GSPE distance matrix of a grid");
    gspe_cmd->add_option("--height", height, "Grid height")->required();
    gspe_cmd->add_option("--width", width, "Grid width")->required();
    gspe_cmd->add_option("--json", json_target, "Output path or - for stdout");

    auto* align_cmd = app.add_subcommand("align", "Least-squares scale/shift alignment of pred to gt");
    align_cmd->add_option("--pred", pred_path, "Predicted depth PFM")->required();
    align_cmd->add_option("--gt", gt_path, "Ground-truth depth PFM")->required();
    align_cmd->add_option("--out", out_path, "Write the aligned prediction here");
    align_cmd->add_option("--json", json_target, "Output path or - for stdout");

    auto* eval_cmd = app.add_subcommand("eval", "Depth evaluation metrics");
    eval_cmd->add_option("--pred", pred_path, "Predicted depth PFM")->required();
    eval_cmd->add_option("--gt", gt_path, "Ground-truth depth PFM")->required();
    eval_cmd->add_flag("--align", align_first, "Align scale/shift before scoring");
    eval_cmd->add_option("--json", json_target, "Output path or - for stdout");

    auto* loss_cmd = app.add_subcommand("loss", "Scale-and-shift-invariant loss");
    loss_cmd->add_option("--pred", pred_path, "Predicted depth PFM")->required();
    loss_cmd->add_option("--gt", gt_path, "Ground-truth depth PFM")->required();
    loss_cmd->add_flag("--grad-check", grad_check, "Compare analytic and finite-difference gradients");
    loss_cmd->add_option("--json", json_target, "Output path or - for stdout");

    auto* demo_cmd = app.add_subcommand("attn-demo", "Seeded GCPE + decoder forward pass");
    demo_cmd->add_option("--seed", seed, "SplitMix64 seed")->required();
    demo_cmd->add_option("--height", demo_height, "Panorama height (multiple of 32)");
    demo_cmd->add_option("--window", demo_window, "Attention window side");
    demo_cmd->add_option("--json", json_target, "Output path or - for stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << "\n";
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kUsage;
    }

    try {
        if (brp_cmd->parsed()) {
            const io::PfmImage img = io::read_pfm(in_path);
            const ErpTensor t = io::to_tensor(img);
            io::write_pfm(out_path, io::from_tensor(inverse ? brp_inverse(t) : brp(t), img.scale));
        } else if (rotate_cmd->parsed()) {
            const io::PfmImage img = io::read_pfm(in_path);
            const ErpTensor t = io::to_tensor(img);
            io::write_pfm(out_path,
                          io::from_tensor(inverse ? circular_rotate_inverse(t, cols) : circular_rotate(t, cols), img.scale));
        } else if (cle_cmd->parsed()) {
            const WindowSpec spec{window, {height, width}};
            const CleTable table = cle_window_distances(spec, row);
            Json j = detail::report_header("cle");
            j["params"] = Json{{"height", height}, {"width", width}, {"window", window}, {"row", row}};
            j["dist"] = detail::matrix_json(table.dist);
            detail::emit(j, json_target, out);
        } else if (gspe_cmd->parsed()) {
            const GspeMatrix g = gspe_matrix({height, width});
            Json j = detail::report_header("gspe");
            j["params"] = Json{{"height", height}, {"width", width}};
            j["dist"] = detail::matrix_json(g.dist);
            detail::emit(j, json_target, out);
        } else if (align_cmd->parsed()) {
            const io::PfmImage pred_img = io::read_pfm(pred_path);
            const io::PfmImage gt_img = io::read_pfm(gt_path);
            const DepthMap pred = io::to_depth_map(pred_img);
            const DepthMap gt = io::to_depth_map(gt_img);
            const AlignParams a = ssi_align(pred, gt);
            if (!out_path.empty()) io::write_pfm(out_path, io::from_depth_map(apply_alignment(pred, a), pred_img.scale));
            Json j = detail::report_header("align");
            j["inputs"] = Json{{"pred", detail::digest(pred_img)}, {"gt", detail::digest(gt_img)}};
            j["align"] = detail::align_json(a);
            j["valid_count"] = count_valid(gt);
            detail::emit(j, json_target, out);
        } else if (eval_cmd->parsed()) {
            const io::PfmImage pred_img = io::read_pfm(pred_path);
            const io::PfmImage gt_img = io::read_pfm(gt_path);
            const MetricsReport m = evaluate(io::to_depth_map(pred_img), io::to_depth_map(gt_img), align_first);
            Json j = detail::report_header("eval");
            j["inputs"] = Json{{"pred", detail::digest(pred_img)}, {"gt", detail::digest(gt_img)}};
            j["params"] = Json{{"align", align_first}};
            j["metrics"] = detail::metrics_json(m);
            detail::emit(j, json_target, out);
        } else if (loss_cmd->parsed()) {
            const io::PfmImage pred_img = io::read_pfm(pred_path);
            const io::PfmImage gt_img = io::read_pfm(gt_path);
            const DepthMap pred = io::to_depth_map(pred_img);
            const DepthMap gt = io::to_depth_map(gt_img);
            const auto [report, a] = total_loss(pred, gt);
            Json j = detail::report_header("loss");
            j["inputs"] = Json{{"pred", detail::digest(pred_img)}, {"gt", detail::digest(gt_img)}};
            j["params"] = Json{{"grad_check", grad_check}};
            j["loss"] = detail::loss_json(report);
            j["align"] = detail::align_json(a);
            if (grad_check) {
                const DepthMap analytic = loss_gradient(pred, gt, a);
                const DepthMap numeric = numeric_loss_gradient(pred, gt, a, kGradCheckStep);
                j["grad_check"] = Json{{"step", kGradCheckStep}, {"max_rel_error", max_relative_error(analytic, numeric)}};
            }
            detail::emit(j, json_target, out);
        } else if (demo_cmd->parsed()) {
            DemoConfig cfg;
            cfg.seed = seed;
            cfg.height = demo_height;
            cfg.window = demo_window;
            detail::emit(detail::run_attn_demo(cfg), json_target, out);
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kData;
    }
    return kOk;
}

}  // namespace pano::cli

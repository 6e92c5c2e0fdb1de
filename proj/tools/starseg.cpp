// Command-line surface for the star-convex shape inference pipeline:
// synthesize data, train the cascade, run inference, evaluate, and
// self-verify gradients.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "starseg/errors.hpp"
#include "starseg/pipeline.hpp"

namespace fs = std::filesystem;
using namespace starseg;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;

struct ConfigOpts {
    std::string config_path;
    int jobs = -1;
    std::vector<std::string> overrides;  // key=value
};

void add_config_opts(CLI::App* cmd, ConfigOpts& opts) {
    cmd->add_option("--config", opts.config_path, "line-oriented key = value config file");
    cmd->add_option("--jobs", opts.jobs, "worker threads (default: all cores)");
    cmd->add_option("--set", opts.overrides, "config override key=value (repeatable)");
}

PipelineConfig resolve_config(const ConfigOpts& opts) {
    PipelineConfig cfg;
    if (!opts.config_path.empty()) cfg = load_config(opts.config_path);
    for (const auto& kv : opts.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--set expects key=value, got: " + kv);
        apply_config_entry(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (opts.jobs > 0) cfg.jobs = opts.jobs;
    cfg.validate();
#ifdef _OPENMP
    if (cfg.jobs > 0) omp_set_num_threads(cfg.jobs);
#endif
    return cfg;
}

std::string shape_model_path(const std::string& cascade_manifest) {
    fs::path p(cascade_manifest);
    return (p.parent_path() / (p.stem().string() + ".asm")).string();
}

void write_loss_csv(const std::vector<LossReport>& losses, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path);
    out << "epoch,mean_loss\n" << std::setprecision(17);
    for (const auto& r : losses) out << r.epoch << "," << r.mean_loss << "\n";
}

void write_outputs(const InferenceOutput& out, const std::string& out_dir,
                   const std::string& stem, bool per_level) {
    save_contour(out.fit.contour, (fs::path(out_dir) / (stem + ".contour")).string());
    write_pgm(out.maps.final.map, (fs::path(out_dir) / (stem + "_map.pgm")).string());
    save_map(out.maps.final, (fs::path(out_dir) / (stem + "_map.raw")).string());
    if (per_level)
        for (std::size_t k = 0; k < out.maps.per_level.size(); ++k)
            write_pgm(out.maps.per_level[k].map,
                      (fs::path(out_dir) / (stem + "_level" + std::to_string(k) +
                                            "_map.pgm")).string());
}

int cmd_synth(const ConfigOpts& copts, const std::string& out_dir) {
    PipelineConfig cfg = resolve_config(copts);
    auto entries = gen_dataset(cfg.dataset_config(), out_dir);
    std::cout << "wrote " << entries.size() << " samples to " << out_dir
              << " (manifest.tsv)\n";
    return 0;
}

int cmd_train(const ConfigOpts& copts, const std::string& manifest,
              const std::string& out_path, bool force) {
    PipelineConfig cfg = resolve_config(copts);
    if (fs::exists(out_path) && !force)
        throw std::invalid_argument("output exists, pass --force to overwrite: " +
                                    out_path);

    auto train = load_dataset(manifest, "train");
    if (train.empty())
        throw std::invalid_argument("manifest has no train entries: " + manifest);

    TrainedPipeline tp = train_pipeline(cfg, train);

    fs::create_directories(fs::path(out_path).parent_path().empty()
                               ? fs::path(".")
                               : fs::path(out_path).parent_path());
    save_cascade(tp.cascade, out_path);
    save_shape_model(tp.shape, shape_model_path(out_path));

    const fs::path dir = fs::path(out_path).parent_path();
    const std::string stem = fs::path(out_path).stem().string();
    for (std::size_t k = 0; k < tp.level_losses.size(); ++k)
        write_loss_csv(tp.level_losses[k],
                       (dir / (stem + "_level" + std::to_string(k) + "_loss.csv"))
                           .string());
    {
        std::ofstream side((dir / (stem + ".config")).string());
        side << dump_config(cfg);
    }

    for (std::size_t k = 0; k < tp.level_losses.size(); ++k)
        std::cout << "level " << k << " final mean loss "
                  << tp.level_losses[k].back().mean_loss << "\n";
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

int cmd_infer(const ConfigOpts& copts, const std::string& model_path,
              const std::string& image_path, const std::string& manifest,
              const std::string& split, const std::string& out_dir,
              bool per_level) {
    PipelineConfig cfg = resolve_config(copts);
    CascadeModel cascade = load_cascade(model_path);
    ShapeModel shape = load_shape_model(shape_model_path(model_path));
    fs::create_directories(out_dir);

    if (!image_path.empty()) {
        GrayImage img = read_pgm(image_path);
        InferenceOutput out = infer_image(cascade, shape, img, cfg);
        write_outputs(out, out_dir, fs::path(image_path).stem().string(), per_level);
        std::cout << "wrote outputs for 1 image to " << out_dir << "\n";
        return 0;
    }

    auto samples = load_dataset(manifest, split);
    if (samples.empty())
        throw std::invalid_argument("manifest has no '" + split + "' entries");
    std::vector<InferenceOutput> outs(samples.size());
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < int(samples.size()); ++i)
        outs[i] = infer_image(cascade, shape, samples[i].image, cfg);
    for (std::size_t i = 0; i < samples.size(); ++i)
        write_outputs(outs[i], out_dir, samples[i].stem, per_level);
    std::cout << "wrote outputs for " << samples.size() << " images to "
              << out_dir << "\n";
    return 0;
}

int cmd_eval(const ConfigOpts& copts, const std::string& manifest,
             const std::string& split, const std::string& pred_dir,
             const std::string& out_prefix) {
    resolve_config(copts);
    auto samples = load_dataset(manifest, split);
    if (samples.empty())
        throw std::invalid_argument("manifest has no '" + split + "' entries");

    std::vector<std::string> matched_stems;
    std::vector<MetricReport> reports;
    int unmatched = 0;
    for (const auto& s : samples) {
        const fs::path contour_path = fs::path(pred_dir) / (s.stem + ".contour");
        const fs::path mask_path = fs::path(pred_dir) / (s.stem + "_pred.pgm");
        GrayImage pred_mask;
        if (fs::exists(contour_path)) {
            Contour c = load_contour(contour_path.string());
            pred_mask = contour_to_mask(c, s.mask.width, s.mask.height);
        } else if (fs::exists(mask_path)) {
            pred_mask = read_pgm(mask_path.string());
        } else {
            std::cerr << "warning: no prediction for " << s.stem << ", excluded\n";
            ++unmatched;
            continue;
        }
        reports.push_back(evaluate_pair(pred_mask, s.mask));
        matched_stems.push_back(s.stem);
    }
    if (reports.empty())
        throw std::invalid_argument("no predictions matched any manifest entry");

    {
        std::ofstream csv(out_prefix + "_per_image.csv");
        if (!csv) throw io_error("cannot write " + out_prefix + "_per_image.csv");
        csv << "image,dice,adb,conform,jaccard,precision,recall\n"
            << std::fixed << std::setprecision(6);
        for (std::size_t i = 0; i < reports.size(); ++i) {
            const auto& r = reports[i];
            csv << matched_stems[i] << "," << r.dice << "," << r.adb << ","
                << r.conformity << "," << r.jaccard << "," << r.precision << ","
                << r.recall << "\n";
        }
    }
    const MetricReport mean = aggregate(reports);
    {
        std::ofstream sum(out_prefix + "_summary.tsv");
        if (!sum) throw io_error("cannot write " + out_prefix + "_summary.tsv");
        sum << "Dice\tAdb\tConform\tJaccard\tPrecision\tRecall\n"
            << format_report_tsv(mean) << "\n";
    }
    std::cout << "Dice\tAdb\tConform\tJaccard\tPrecision\tRecall\n"
              << format_report_tsv(mean) << "\n";
    if (unmatched > 0)
        std::cerr << "warning: " << unmatched << " entries had no prediction\n";
    return 0;
}

int cmd_gradcheck(int input_dim, int hidden, int output_dim, int timesteps,
                  std::uint64_t seed, double step, bool corrupt) {
    GradCheckReport r = gradcheck_bilstm(input_dim, hidden, output_dim,
                                         timesteps, seed, step, corrupt);
    const bool pass = r.max_rel_error < 1e-4;
    std::cout << (pass ? "PASS" : "FAIL") << " max relative error "
              << std::scientific << r.max_rel_error << " over "
              << r.n_parameters << " parameters (worst block: " << r.worst_block
              << "[" << r.worst_index << "])\n";
    return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"star-convex shape inference: polar serialization + recurrent "
                 "boundary completion + auto-context refinement + ASM fitting"};
    app.require_subcommand(1);

    ConfigOpts synth_cfg, train_cfg, infer_cfg, eval_cfg;

    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    std::string synth_out;
    add_config_opts(synth, synth_cfg);
    synth->add_option("--out", synth_out, "output directory")->required();

    auto* train = app.add_subcommand("train", "train the cascade on a manifest");
    std::string train_manifest, train_out;
    bool train_force = false;
    add_config_opts(train, train_cfg);
    train->add_option("--manifest", train_manifest, "dataset manifest")->required();
    train->add_option("--out", train_out, "cascade manifest to write (.json)")->required();
    train->add_flag("--force", train_force, "overwrite existing outputs");

    auto* infer = app.add_subcommand("infer", "run inference");
    std::string infer_model, infer_image_path, infer_manifest, infer_out,
        infer_split = "test";
    bool infer_per_level = false;
    add_config_opts(infer, infer_cfg);
    infer->add_option("--model", infer_model, "cascade manifest")->required();
    infer->add_option("--image", infer_image_path, "single PGM image");
    infer->add_option("--manifest", infer_manifest, "dataset manifest (batch)");
    infer->add_option("--split", infer_split, "manifest split (default test)");
    infer->add_option("--out-dir", infer_out, "output directory")->required();
    infer->add_flag("--per-level", infer_per_level, "also dump per-level maps");

    auto* eval = app.add_subcommand("eval", "evaluate predictions against truth");
    std::string eval_manifest, eval_pred, eval_prefix, eval_split = "test";
    add_config_opts(eval, eval_cfg);
    eval->add_option("--manifest", eval_manifest, "truth manifest")->required();
    eval->add_option("--split", eval_split, "manifest split (default test)");
    eval->add_option("--pred-dir", eval_pred, "directory with predictions")->required();
    eval->add_option("--out-prefix", eval_prefix, "report file prefix")->required();

    auto* grad = app.add_subcommand("gradcheck", "finite-difference gradient check");
    int gc_in = 3, gc_hidden = 4, gc_out = 3, gc_t = 5;
    std::uint64_t gc_seed = 7;
    double gc_step = 1e-5;
    bool gc_corrupt = false;
    grad->add_option("--input-dim", gc_in);
    grad->add_option("--hidden", gc_hidden);
    grad->add_option("--output-dim", gc_out);
    grad->add_option("--timesteps", gc_t);
    grad->add_option("--seed", gc_seed);
    grad->add_option("--step", gc_step);
    grad->add_flag("--corrupt", gc_corrupt,
                   "corrupt one gradient entry (negative control)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) return cmd_synth(synth_cfg, synth_out);
        if (*train) return cmd_train(train_cfg, train_manifest, train_out, train_force);
        if (*infer) {
            if (infer_image_path.empty() == infer_manifest.empty())
                throw std::invalid_argument(
                    "infer: pass exactly one of --image or --manifest");
            return cmd_infer(infer_cfg, infer_model, infer_image_path,
                             infer_manifest, infer_split, infer_out,
                             infer_per_level);
        }
        if (*eval)
            return cmd_eval(eval_cfg, eval_manifest, eval_split, eval_pred,
                            eval_prefix);
        if (*grad)
            return cmd_gradcheck(gc_in, gc_hidden, gc_out, gc_t, gc_seed, gc_step,
                                 gc_corrupt);
    } catch (const numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const io_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::domain_error& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

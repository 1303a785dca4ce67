// lapnet command-line tool: synth, preprocess, train, eval, export.

#include <lapnet/pipeline.hpp>
#include <lapnet/ply.hpp>
#include <lapnet/synth.hpp>
#include <lapnet/training.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <thread>

namespace fs = std::filesystem;
using namespace lapnet;
using json = nlohmann::json;

namespace {

constexpr const char* kCacheExtension = ".lpf";

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Runs fn(i) for i in [0, n) on `workers` threads. Errors are collected per
/// item instead of stopping the loop.
std::vector<std::string> parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn)
{
    std::vector<std::string> errors(n);
    std::atomic<std::size_t> next{0};
    auto run = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    const int count = std::max(1, std::min<int>(workers, static_cast<int>(n)));
    std::vector<std::thread> threads;
    for (int t = 1; t < count; ++t) {
        threads.emplace_back(run);
    }
    run();
    for (auto& t : threads) {
        t.join();
    }
    return errors;
}

struct PreprocessFlags {
    int eigs = kDefaultEigenFeatures;
    std::vector<int> clusters{16, 8};
    std::uint64_t seed = 1;
    bool include_constant = false;
    bool cluster_on_signed = false;

    void add_to(CLI::App* cmd)
    {
        cmd->add_option("--eigs", eigs, "Eigenvector feature count")->capture_default_str()->check(CLI::PositiveNumber);
        cmd->add_option("--clusters", clusters, "Cluster count per pooling level, comma separated")
            ->delimiter(',')
            ->capture_default_str();
        cmd->add_option("--seed", seed, "Clustering seed")->capture_default_str();
        cmd->add_flag("--include-constant-eig", include_constant, "Use phi_0..phi_{k-1} instead of phi_1..phi_k");
        cmd->add_flag("--cluster-on-signed", cluster_on_signed, "Cluster on signed eigenvectors");
    }

    PreprocessParams params() const
    {
        PreprocessParams p;
        p.eigen_count = eigs;
        p.cluster_counts = clusters;
        p.seed = seed;
        p.include_constant = include_constant;
        p.cluster_on_signed = cluster_on_signed;
        return p;
    }
};

// ---------------------------------------------------------------------------
// synth

struct SynthOptions {
    fs::path output;
    std::string family = "all";
    int count = 20;
    int resolution = 2;
    int vertices = 0;
    std::uint64_t seed = 1;
    std::string parts;
    bool remesh = false;
};

int cmd_synth(const SynthOptions& o)
{
    std::vector<ShapeFamily> families;
    if (o.family == "all") {
        families = {ShapeFamily::Sphere, ShapeFamily::Torus, ShapeFamily::Cylinder, ShapeFamily::Dumbbell};
    } else {
        families = {parse_family(o.family)};
    }
    std::string parts = o.parts;
    if (parts.empty()) {
        parts = families.size() == 1 && families[0] == ShapeFamily::Dumbbell ? "three" : "none";
    }
    LabelRule rule = LabelRule::None;
    if (parts == "three") {
        rule = LabelRule::DumbbellThreePart;
    } else if (parts == "two") {
        rule = LabelRule::DumbbellTwoPart;
    } else if (parts != "none") {
        throw ArgumentError("--parts must be none, two or three");
    }

    fs::create_directories(o.output);
    std::vector<ManifestEntry> manifest;
    for (std::size_t f = 0; f < families.size(); ++f) {
        for (int i = 0; i < o.count; ++i) {
            SyntheticSpec spec;
            spec.family = families[f];
            spec.resolution = o.resolution;
            if (o.vertices > 0) {
                spec.target_vertices = o.vertices;
            }
            const std::uint64_t mesh_seed = splitmix64(o.seed ^ (static_cast<std::uint64_t>(spec.family) << 32) ^ i);
            spec.deformation_seed = mesh_seed | 1U;
            spec.labels = rule;
            SyntheticMesh shape = generate_synthetic(spec);
            if (o.remesh) {
                Mesh remeshed = remesh(shape.mesh, splitmix64(mesh_seed));
                const auto nearest = nearest_vertices(remeshed.vertices, shape.mesh.vertices);
                std::vector<int> labels(nearest.size());
                for (std::size_t v = 0; v < nearest.size(); ++v) {
                    labels[v] = shape.labels[nearest[v]];
                }
                shape = {std::move(remeshed), std::move(labels)};
            }

            std::ostringstream id;
            id << family_name(spec.family) << '_' << std::setw(3) << std::setfill('0') << i;
            save_obj(shape.mesh, o.output / (id.str() + ".obj"));
            if (rule != LabelRule::None) {
                save_vertex_labels(o.output / (id.str() + ".seg"), shape.labels);
            }
            manifest.push_back({id.str(), static_cast<int>(f)});
        }
    }
    save_manifest(o.output / "manifest.txt", manifest);
    std::cout << json{{"meshes", manifest.size()}, {"output", o.output.string()}}.dump() << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// preprocess

int cmd_preprocess(const fs::path& input, const fs::path& output, const PreprocessFlags& flags, int workers)
{
    if (!fs::is_directory(input)) {
        throw ArgumentError("input directory " + input.string() + " does not exist");
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(input)) {
        if (entry.is_regular_file() && entry.path().extension() == ".obj") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        throw ArgumentError("no .obj files in " + input.string());
    }
    fs::create_directories(output);

    const PreprocessParams params = flags.params();
    const std::uint64_t fingerprint = params_fingerprint(params);
    std::vector<char> skipped(files.size(), 0);
    const auto errors = parallel_for(files.size(), workers, [&](std::size_t i) {
        const Mesh mesh = load_obj(files[i]);
        const fs::path target = output / (files[i].stem().string() + kCacheExtension);
        if (cache_is_current(target, mesh_hash(mesh), fingerprint)) {
            skipped[i] = 1;
            return;
        }
        save_feature_cache(target, preprocess_mesh(mesh, params));
    });

    int failed = 0;
    for (std::size_t i = 0; i < files.size(); ++i) {
        if (!errors[i].empty()) {
            ++failed;
            std::cerr << "failed: " << errors[i] << '\n';
        }
    }
    const auto skip_count = std::count(skipped.begin(), skipped.end(), 1);
    std::cout << json{{"files", files.size()},
                      {"computed", static_cast<long>(files.size()) - skip_count - failed},
                      {"skipped", skip_count},
                      {"failed", failed}}
                     .dump()
              << '\n';
    return failed == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// dataset assembly shared by train and eval

Dataset load_dataset(const fs::path& cache_dir, const fs::path& label_dir, const std::vector<ManifestEntry>& manifest,
                     Task task)
{
    Dataset dataset;
    for (const auto& entry : manifest) {
        const fs::path cache_path = cache_dir / (entry.mesh_id + kCacheExtension);
        if (!fs::exists(cache_path)) {
            throw ArgumentError("no feature cache for mesh '" + entry.mesh_id + "' in " + cache_dir.string());
        }
        const FeatureCache cache = load_feature_cache(cache_path);
        SampleRecord sample;
        sample.id = entry.mesh_id;
        sample.features = cache.features();
        sample.hierarchy = cache.hierarchy;
        sample.category = entry.category;
        if (task == Task::Segmentation) {
            sample.part_labels = load_vertex_labels(label_dir / (entry.mesh_id + ".seg"));
            if (static_cast<int>(sample.part_labels.size()) != cache.num_vertices()) {
                throw ArgumentError("mesh '" + entry.mesh_id + "': " + std::to_string(sample.part_labels.size())
                                    + " labels for " + std::to_string(cache.num_vertices()) + " vertices");
            }
        }
        dataset.push_back(std::move(sample));
    }
    return dataset;
}

Task parse_task(const std::string& task)
{
    if (task == "seg") {
        return Task::Segmentation;
    }
    if (task == "cls") {
        return Task::Classification;
    }
    throw ArgumentError("--task must be seg or cls");
}

nn::PoolMode parse_pool(const std::string& pool)
{
    if (pool == "max") {
        return nn::PoolMode::Max;
    }
    if (pool == "mean") {
        return nn::PoolMode::Mean;
    }
    throw ArgumentError("--pool must be max or mean");
}

// ---------------------------------------------------------------------------
// train

struct TrainOptions {
    fs::path input;
    fs::path labels;
    fs::path output;
    std::string task = "seg";
    std::string pool = "max";
    bool raw_correlation = false;
    double holdout = 0.0;
    fs::path resume;
    TrainConfig config;
};

int cmd_train(const TrainOptions& o)
{
    const Task task = parse_task(o.task);
    const TrainConfig& tc = o.config;
    std::cout << json{{"task", o.task},
                      {"epochs", tc.epochs},
                      {"batch", tc.batch},
                      {"lr", tc.learning_rate},
                      {"clusters", tc.cluster_counts},
                      {"eigs", tc.eigen_count},
                      {"seed", tc.seed},
                      {"pool", o.pool}}
                     .dump()
              << '\n';

    auto manifest = load_manifest(o.labels / "manifest.txt");
    if (manifest.empty()) {
        throw ArgumentError("manifest lists no meshes");
    }
    fs::create_directories(o.output);
    if (o.holdout > 0.0) {
        std::vector<int> categories;
        for (const auto& e : manifest) {
            categories.push_back(e.category);
        }
        const auto split = split_dataset(categories, {1.0 - o.holdout, o.holdout}, tc.seed);
        std::vector<ManifestEntry> train_entries;
        std::vector<ManifestEntry> test_entries;
        for (auto i : split.train) {
            train_entries.push_back(manifest[i]);
        }
        for (auto i : split.test) {
            test_entries.push_back(manifest[i]);
        }
        save_manifest(o.output / "train_manifest.txt", train_entries);
        save_manifest(o.output / "test_manifest.txt", test_entries);
        manifest = std::move(train_entries);
    }

    const Dataset dataset = load_dataset(o.input, o.labels, manifest, task);

    ModelConfig model;
    model.input_dim = 6 + tc.eigen_count;
    model.blocks.clear();
    for (int clusters : tc.cluster_counts) {
        MPBConfig block;
        block.clusters = clusters;
        block.normalize_correlation = !o.raw_correlation;
        model.blocks.push_back(block);
    }
    model.pool = parse_pool(o.pool);
    model.head.task = task;
    int max_category = 0;
    int max_label = 0;
    for (const auto& s : dataset) {
        max_category = std::max(max_category, s.category);
        for (int label : s.part_labels) {
            max_label = std::max(max_label, label);
        }
    }
    model.head.num_categories = max_category + 1;
    if (task == Task::Segmentation) {
        model.head.num_labels = max_label + 1;
        std::vector<std::set<int>> seen(model.head.num_categories);
        for (const auto& s : dataset) {
            seen[s.category].insert(s.part_labels.begin(), s.part_labels.end());
        }
        for (const auto& labels : seen) {
            model.head.category_labels.emplace_back(labels.begin(), labels.end());
        }
    }
    validate_config(model);
    // Reject cache/label/config mismatches before any training starts.
    for (const auto& sample : dataset) {
        validate_sample(sample, model);
    }

    TrainState state;
    if (!o.resume.empty()) {
        state = load_checkpoint(o.resume, model).state;
    } else {
        state = init_train_state(model, tc.seed);
    }

    std::ofstream log(o.output / "train.log", o.resume.empty() ? std::ios::trunc : std::ios::app);
    double best_loss = std::numeric_limits<double>::infinity();
    train(state, dataset, model, tc, [&](const EpochRecord& record, const TrainState& current) {
        const std::string line = epoch_record_json(record);
        std::cout << line << std::endl;
        log << line << std::endl;
        save_checkpoint(o.output / "last.ckpt", model, current, tc);
        if (record.mean_loss < best_loss) {
            best_loss = record.mean_loss;
            save_checkpoint(o.output / "best.ckpt", model, current, tc);
        }
    });
    save_checkpoint(o.output / "final.ckpt", model, state, tc);
    return 0;
}

// ---------------------------------------------------------------------------
// eval

int cmd_eval(const fs::path& checkpoint, const fs::path& input, const fs::path& labels, const fs::path& manifest_path,
             int workers)
{
    Checkpoint ckpt = load_checkpoint(checkpoint);
    const ModelConfig& model = ckpt.config;
    const auto manifest = load_manifest(manifest_path.empty() ? labels / "manifest.txt" : manifest_path);
    const Dataset dataset = load_dataset(input, labels, manifest, model.head.task);
    if (dataset.empty()) {
        throw ArgumentError("no samples to evaluate");
    }
    for (const auto& sample : dataset) {
        validate_sample(sample, model);
    }

    std::vector<std::vector<int>> predictions(dataset.size());
    const auto errors = parallel_for(dataset.size(), workers, [&](std::size_t i) {
        predictions[i] = predict(dataset[i], ckpt.state.params, model);
    });
    for (const auto& e : errors) {
        if (!e.empty()) {
            throw Error(e);
        }
    }

    Metrics metrics;
    if (model.head.task == Task::Segmentation) {
        metrics = segmentation_metrics(predictions, dataset, model);
    } else {
        std::vector<int> top;
        for (const auto& p : predictions) {
            top.push_back(p.front());
        }
        metrics = classification_metrics(top, dataset);
    }

    const bool seg = model.head.task == Task::Segmentation;
    std::cout << std::left << std::setw(10) << "category" << std::setw(9) << "samples" << std::setw(10) << "vertices"
              << std::setw(10) << "accuracy" << (seg ? "iou" : "") << '\n';
    std::cout << std::fixed << std::setprecision(4);
    json rows = json::array();
    for (const auto& row : metrics.per_category) {
        std::cout << std::setw(10) << row.category << std::setw(9) << row.samples << std::setw(10) << row.vertices
                  << std::setw(10) << row.accuracy;
        if (seg) {
            std::cout << row.iou;
        }
        std::cout << '\n';
        rows.push_back({{"category", row.category}, {"samples", row.samples}, {"accuracy", row.accuracy}, {"iou", row.iou}});
    }
    std::cout << std::setw(10) << "overall" << std::setw(9) << metrics.samples << std::setw(10) << "" << std::setw(10)
              << metrics.accuracy;
    if (seg) {
        std::cout << metrics.iou;
    }
    std::cout << '\n';
    json summary = {{"accuracy", metrics.accuracy}, {"samples", metrics.samples}, {"per_category", rows}};
    if (seg) {
        summary["iou"] = metrics.iou;
    }
    std::cout << summary.dump() << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// export

int cmd_export(const fs::path& checkpoint, const fs::path& mesh_path, const fs::path& output, int category,
               const PreprocessFlags& flags)
{
    Checkpoint ckpt = load_checkpoint(checkpoint);
    const ModelConfig& model = ckpt.config;
    PreprocessParams params = flags.params();
    params.eigen_count = ckpt.train_config.eigen_count;
    params.cluster_counts = model.cluster_counts();

    const Mesh mesh = load_obj(mesh_path);
    const FeatureCache cache = preprocess_mesh(mesh, params);
    SampleRecord sample{mesh_path.stem().string(), cache.features(), cache.hierarchy, {}, category};
    if (model.head.task == Task::Segmentation) {
        sample.part_labels.assign(static_cast<std::size_t>(mesh.num_vertices()), 0);
    }
    validate_sample(sample, model);

    std::vector<int> labels = predict(sample, ckpt.state.params, model);
    if (model.head.task == Task::Classification) {
        std::cout << json{{"predicted_category", labels.front()}}.dump() << '\n';
        labels.assign(static_cast<std::size_t>(mesh.num_vertices()), labels.front());
    }
    if (output.has_parent_path()) {
        fs::create_directories(output.parent_path());
    }
    save_ply(output, mesh, labels);
    for (int l = 0; l < cache.hierarchy.num_levels(); ++l) {
        fs::path level_path = output;
        level_path.replace_filename(output.stem().string() + "_level" + std::to_string(l) + ".ply");
        save_ply(level_path, mesh, cache.hierarchy.levels[l].mask);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"lapnet: Laplacian spectral mesh networks"};
    app.require_subcommand(1);

    SynthOptions synth;
    auto* synth_cmd = app.add_subcommand("synth", "Generate labeled synthetic meshes");
    synth_cmd->add_option("--output,-o", synth.output, "Output directory")->required();
    synth_cmd->add_option("--family", synth.family, "sphere, torus, cylinder, dumbbell or all")->capture_default_str();
    synth_cmd->add_option("--count", synth.count, "Meshes per family")->capture_default_str()->check(CLI::PositiveNumber);
    synth_cmd->add_option("--resolution", synth.resolution, "Subdivision level")->capture_default_str();
    synth_cmd->add_option("--vertices", synth.vertices, "Target vertex count (overrides --resolution)");
    synth_cmd->add_option("--seed", synth.seed, "Deformation seed")->capture_default_str();
    synth_cmd->add_option("--parts", synth.parts, "Dumbbell labels: none, two or three");
    synth_cmd->add_flag("--remesh", synth.remesh, "Subdivide and decimate every mesh");

    fs::path input;
    fs::path output;
    int workers = 1;
    PreprocessFlags pre;
    auto* pre_cmd = app.add_subcommand("preprocess", "Compute feature caches for every OBJ in a directory");
    pre_cmd->add_option("--input,-i", input, "Directory of .obj files")->required();
    pre_cmd->add_option("--output,-o", output, "Cache directory")->required();
    pre_cmd->add_option("--workers", workers, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    pre.add_to(pre_cmd);

    TrainOptions train_opts;
    TrainConfig& tc = train_opts.config;
    auto* train_cmd = app.add_subcommand("train", "Train a model on cached features");
    train_cmd->add_option("--input,-i", train_opts.input, "Cache directory")->required();
    train_cmd->add_option("--labels", train_opts.labels, "Directory with manifest.txt and .seg files")->required();
    train_cmd->add_option("--output,-o", train_opts.output, "Run directory for checkpoints and logs")->required();
    train_cmd->add_option("--task", train_opts.task, "seg or cls")->capture_default_str();
    train_cmd->add_option("--epochs", tc.epochs)->capture_default_str()->check(CLI::NonNegativeNumber);
    train_cmd->add_option("--lr", tc.learning_rate)->capture_default_str()->check(CLI::PositiveNumber);
    train_cmd->add_option("--batch", tc.batch)->capture_default_str()->check(CLI::PositiveNumber);
    train_cmd->add_option("--clusters", tc.cluster_counts, "Cluster counts, comma separated")
        ->delimiter(',')
        ->capture_default_str();
    train_cmd->add_option("--eigs", tc.eigen_count)->capture_default_str()->check(CLI::PositiveNumber);
    train_cmd->add_option("--seed", tc.seed)->capture_default_str();
    train_cmd->add_option("--pool", train_opts.pool, "max or mean")->capture_default_str();
    train_cmd->add_flag("--raw-correlation", train_opts.raw_correlation, "Apply C = Psi Psi^T without row normalization");
    train_cmd->add_option("--holdout", train_opts.holdout, "Fraction held out per category")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    train_cmd->add_option("--resume", train_opts.resume, "Continue from a checkpoint");

    fs::path checkpoint;
    fs::path labels;
    fs::path manifest;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
    eval_cmd->add_option("--checkpoint", checkpoint)->required();
    eval_cmd->add_option("--input,-i", input, "Cache directory")->required();
    eval_cmd->add_option("--labels", labels, "Directory with manifest.txt and .seg files")->required();
    eval_cmd->add_option("--manifest", manifest, "Manifest to evaluate instead of <labels>/manifest.txt");
    eval_cmd->add_option("--workers", workers, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);

    fs::path mesh_path;
    int category = 0;
    PreprocessFlags export_pre;
    auto* export_cmd = app.add_subcommand("export", "Write predicted labels and clusters as colored PLY");
    export_cmd->add_option("--checkpoint", checkpoint)->required();
    export_cmd->add_option("--mesh", mesh_path, "Input OBJ")->required();
    export_cmd->add_option("--output,-o", output, "Output .ply")->required();
    export_cmd->add_option("--category", category, "Object category (segmentation)")->capture_default_str();
    export_cmd->add_option("--seed", export_pre.seed, "Clustering seed")->capture_default_str();
    export_cmd->add_flag("--include-constant-eig", export_pre.include_constant);
    export_cmd->add_flag("--cluster-on-signed", export_pre.cluster_on_signed);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth_cmd) {
            return cmd_synth(synth);
        }
        if (*pre_cmd) {
            return cmd_preprocess(input, output, pre, workers);
        }
        if (*train_cmd) {
            return cmd_train(train_opts);
        }
        if (*eval_cmd) {
            return cmd_eval(checkpoint, input, labels, manifest, workers);
        }
        if (*export_cmd) {
            return cmd_export(checkpoint, mesh_path, output, category, export_pre);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

//! The `shexi` command line: schema checking, stratification reports, and
//! validation runs.
//!
//! Exit codes: 0 success / all conformant, 1 input error, 2 ill-defined
//! schema, 3 some request non-conformant, 4 oracle disagreement.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::analysis::{
    build_dependency_graph, build_hierarchy, check_well_defined, stratify,
};
use crate::engine::{
    brute_force_maximal_typing, maximal_typing, validate, ConformanceMode, EngineError,
};
use crate::rdf::parse_graph;
use crate::schema::Schema;
use crate::text::{parse_schema, parse_shape_map};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT_ERROR: i32 = 1;
pub const EXIT_ILL_DEFINED: i32 = 2;
pub const EXIT_NON_CONFORMANT: i32 = 3;
pub const EXIT_ORACLE_DISAGREEMENT: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "shexi",
    about = "Validate RDF graphs against shape expression schemas with inheritance"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// One validation run, with all inputs resolved.
#[derive(Debug, Clone, clap::Args)]
pub struct ValidateArgs {
    /// Schema file (.shexi)
    #[arg(long)]
    pub schema: PathBuf,
    /// Graph file (.nt subset)
    #[arg(long)]
    pub data: PathBuf,
    /// Shape map: a .smap file path or inline `node @ Label` text
    #[arg(long, default_value = "")]
    pub map: String,
    /// Conformance mode
    #[arg(long, default_value = "descendant-closure")]
    pub mode: ConformanceMode,
    /// Include the full maximal typing in the report
    #[arg(long)]
    pub dump_typing: bool,
    /// Re-derive the maximal typing with the brute-force oracle and fail on
    /// disagreement (skipped when the instance exceeds the oracle bound)
    #[arg(long)]
    pub oracle_check: bool,
    /// Write the JSON report here instead of standard output
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a schema and report well-formedness and well-definedness
    Check { schema: PathBuf },
    /// Print strata and DOT renderings of the hierarchy and dependency
    /// graphs
    Stratify { schema: PathBuf },
    /// Compute the maximal typing and answer shape map requests
    Validate(ValidateArgs),
}

/// Parses arguments (without the program name) and runs the command.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv = std::iter::once("shexi".to_string()).chain(args.into_iter().map(Into::into));
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.exit_code() == 0 { EXIT_OK } else { EXIT_INPUT_ERROR };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Check { schema } => run_check(&schema),
        Command::Stratify { schema } => run_stratify(&schema),
        Command::Validate(args) => run_validate(&args),
    }
}

fn load_schema(path: &Path) -> Result<Schema, i32> {
    let text = fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_INPUT_ERROR
    })?;
    parse_schema(&text).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        EXIT_INPUT_ERROR
    })
}

fn run_check(path: &Path) -> i32 {
    let schema = match load_schema(path) {
        Ok(s) => s,
        Err(code) => return code,
    };
    println!(
        "schema: {} simple, {} extendable, {} abstract label(s)",
        schema.simple_labels().count(),
        schema.extendable_labels().count(),
        schema.abstract_labels().count()
    );
    // parse_schema already enforces well-formedness; report it explicitly
    println!("form: ok");
    let verdict = check_well_defined(&schema);
    println!("well-definedness: {}", verdict.describe(&schema));
    if verdict.is_ok() {
        EXIT_OK
    } else {
        EXIT_ILL_DEFINED
    }
}

fn run_stratify(path: &Path) -> i32 {
    let schema = match load_schema(path) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let stratification = match stratify(&schema) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            let verdict = check_well_defined(&schema);
            if !verdict.is_ok() {
                eprintln!("{}", verdict.describe(&schema));
            }
            return EXIT_ILL_DEFINED;
        }
    };
    println!("strata: {}", stratification.stratum_count());
    for i in 1..=stratification.stratum_count() {
        let labels: Vec<&str> = stratification
            .labels_on(i)
            .into_iter()
            .map(|id| schema.name(id))
            .collect();
        println!("  [{i}] {}", labels.join(" "));
    }
    println!("\n# extension hierarchy");
    print!("{}", build_hierarchy(&schema).to_dot());
    println!("\n# dependency graph");
    print!("{}", build_dependency_graph(&schema).to_dot());
    EXIT_OK
}

fn run_validate(args: &ValidateArgs) -> i32 {
    let schema = match load_schema(&args.schema) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let data = match fs::read_to_string(&args.data) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.data.display());
            return EXIT_INPUT_ERROR;
        }
    };
    let graph = match parse_graph(&data) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("error: {}: {e}", args.data.display());
            return EXIT_INPUT_ERROR;
        }
    };
    // --map accepts a file path or inline shape-map text
    let map_text = if args.map.is_empty() {
        String::new()
    } else if Path::new(&args.map).exists() {
        match fs::read_to_string(&args.map) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", args.map);
                return EXIT_INPUT_ERROR;
            }
        }
    } else {
        args.map.clone()
    };
    let requests = match parse_shape_map(&map_text, &schema) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: shape map: {e}");
            return EXIT_INPUT_ERROR;
        }
    };

    let report = match validate(&graph, &schema, &requests, args.mode, args.dump_typing) {
        Ok(r) => r,
        Err(EngineError::IllDefined(v)) => {
            eprintln!("error: schema is not well-defined");
            eprintln!("{}", v.describe(&schema));
            return EXIT_ILL_DEFINED;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT_ERROR;
        }
    };

    if args.oracle_check {
        match brute_force_maximal_typing(&graph, &schema, args.mode) {
            Ok(slow) => {
                let fast = maximal_typing(&graph, &schema, args.mode)
                    .expect("validation already succeeded");
                if fast != slow {
                    eprintln!("error: refinement and brute-force oracle disagree");
                    return EXIT_ORACLE_DISAGREEMENT;
                }
                eprintln!("oracle check: maximal typings agree");
            }
            Err(EngineError::OracleBound { pairs, bound }) => {
                eprintln!("oracle check skipped: {pairs} pairs exceed bound {bound}");
            }
            Err(e) => {
                eprintln!("error: oracle: {e}");
                return EXIT_INPUT_ERROR;
            }
        }
    }

    let json = report.to_json();
    match &args.output {
        Some(path) => {
            if let Err(e) = fs::write(path, json + "\n") {
                eprintln!("error: cannot write {}: {e}", path.display());
                return EXIT_INPUT_ERROR;
            }
        }
        None => println!("{json}"),
    }
    if report.all_conformant() {
        EXIT_OK
    } else {
        EXIT_NON_CONFORMANT
    }
}

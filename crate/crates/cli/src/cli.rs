use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::stage::Stage;

#[derive(Debug, Clone, Parser)]
#[command(name = "cherry", version, about = "Detect cherry-picked omissions across news outlets")]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, default_value = "run.toml")]
    pub config: PathBuf,
    /// Print the stage report as JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Fetch articles for the registry outlets and keep news pieces.
    Ingest,
    /// Split article bodies into statements.
    Segment,
    /// Group articles into events.
    ClusterEvents,
    /// Group each event's statements into near-duplicate clusters.
    ClusterStatements,
    /// Aggregate annotation votes into a labeled, split dataset.
    BuildDataset {
        #[arg(long)]
        votes: Option<PathBuf>,
        /// Classification configuration 1 to 4.
        #[arg(long)]
        classes: Option<u8>,
    },
    /// Score statements and list what each document leaves out.
    Detect,
    /// Accuracy and macro F-1 of the scorer, or of given predictions.
    Evaluate {
        /// Dataset rows; defaults to the corpus dataset.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// One predicted class per line, aligned with the selected rows.
        #[arg(long)]
        predictions: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = SplitArg::Test)]
        split: SplitArg,
        #[arg(long)]
        classes: Option<u8>,
    },
    /// Rank correlation of outlet scores with bias ratings.
    Correlate {
        /// JSON object of extra rating sources: {source: {outlet_id: score}}.
        #[arg(long)]
        ratings: Option<PathBuf>,
    },
    /// Evaluate every scorer at several context lengths.
    Sweep {
        #[arg(long, value_delimiter = ',')]
        lengths: Option<Vec<usize>>,
    },
    /// Class distribution of the built dataset under each configuration.
    Stats,
    /// Serve the annotation API until interrupted.
    ServeAnnotator {
        #[arg(long)]
        bind: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Test,
    All,
}

impl Command {
    pub fn stage(&self) -> Stage {
        match self {
            Command::Ingest => Stage::Ingest,
            Command::Segment => Stage::Segment,
            Command::ClusterEvents => Stage::ClusterEvents,
            Command::ClusterStatements => Stage::ClusterStatements,
            Command::BuildDataset { .. } => Stage::BuildDataset,
            Command::Detect => Stage::Detect,
            Command::Evaluate { .. } => Stage::Evaluate,
            Command::Correlate { .. } => Stage::Correlate,
            Command::Sweep { .. } => Stage::Sweep,
            Command::Stats => Stage::Stats,
            Command::ServeAnnotator { .. } => Stage::ServeAnnotator,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn subcommand_names_match_stage_names() {
        let cli = Cli::try_parse_from(["cherry", "cluster-statements", "--config", "x.toml"]).unwrap();
        assert_eq!(cli.command.stage(), Stage::ClusterStatements);
        for s in Stage::ALL {
            let parsed = Cli::try_parse_from(["cherry", s.name()]).unwrap();
            assert_eq!(parsed.command.stage(), s);
        }
        let cli = Cli::try_parse_from(["cherry", "--json", "sweep", "--lengths", "100,300"]).unwrap();
        assert!(matches!(cli.command, Command::Sweep { lengths: Some(ref l) } if l == &[100, 300]));
    }
}

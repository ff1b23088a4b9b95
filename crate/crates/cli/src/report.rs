use serde::Serialize;
use vokit_core::io::format_number;
use vokit_core::EvalReport;

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct ConfigEcho {
    pub lengths: Vec<f64>,
    pub stride: usize,
    pub epsilon: f64,
    pub align: &'static str,
}

#[derive(Debug, Serialize)]
pub struct SequenceReport {
    pub name: String,
    pub gt: InputDigest,
    pub pred: InputDigest,
    /// Frames whose translation alignment fell back to the ground truth.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub substituted_frames: Option<Vec<usize>>,
    pub report: EvalReport,
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub tool_version: &'static str,
    pub config: ConfigEcho,
    pub sequences: Vec<SequenceReport>,
    pub average: EvalReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_seconds: Option<f64>,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(format_number).unwrap_or_default()
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is serializable");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("sequence,gt,pred,frames,subsequences,t_rel,r_rel,se\n");
        for s in &self.sequences {
            let r = &s.report;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                csv_field(&s.name),
                csv_field(&s.gt.path),
                csv_field(&s.pred.path),
                r.frame_count,
                r.subsequence_count,
                opt(r.t_rel),
                opt(r.r_rel),
                format_number(r.se)
            ));
        }
        let a = &self.average;
        out.push_str(&format!(
            "average,,,{},{},{},{},{}\n",
            a.frame_count,
            a.subsequence_count,
            opt(a.t_rel),
            opt(a.r_rel),
            format_number(a.se)
        ));
        out
    }

    pub fn to_human(&self) -> String {
        let c = &self.config;
        let lengths: Vec<String> = c.lengths.iter().map(|l| format_number(*l)).collect();
        let mut out = format!(
            "{}  lengths {} m, stride {}, epsilon {}, align {}\n\n",
            self.tool_version,
            lengths.join(","),
            c.stride,
            format_number(c.epsilon),
            c.align
        );
        let width = self.sequences.iter().map(|s| s.name.len()).max().unwrap_or(0).max("sequence".len());
        let cell = |v: Option<f64>, digits: usize| v.map_or("-".to_string(), |x| format!("{x:.digits$}"));
        out.push_str(&format!(
            "{:<width$}  {:>10}  {:>16}  {:>8}  {:>8}\n",
            "sequence", "t_rel (%)", "r_rel (deg/100m)", "se", "subseq"
        ));
        let mut row = |name: &str, r: &EvalReport| {
            out.push_str(&format!(
                "{:<width$}  {:>10}  {:>16}  {:>8}  {:>8}\n",
                name,
                cell(r.t_rel, 3),
                cell(r.r_rel, 3),
                cell(Some(r.se), 4),
                r.subsequence_count
            ));
        };
        for s in &self.sequences {
            row(&s.name, &s.report);
        }
        row("average", &self.average);
        if let Some(t) = self.elapsed_seconds {
            out.push_str(&format!("\nelapsed {t:.3} s\n"));
        }
        out
    }
}

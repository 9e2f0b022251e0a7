//! Readers and writers for the plain-text formats used at the boundaries:
//! expression and response CSVs, GMT gene sets, pathway lists, drug-target
//! maps and dense matrix dumps.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::inference::ResponseMatrix;
use crate::kernelviews::{FeatureMatrix, GeneSet};
use crate::linalg::Matrix;

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    BufReader::new(open(path)?)
        .lines()
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(path, e))
}

/// Header and records of a comma-separated file. Every record must have as
/// many fields as the header.
fn read_csv_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(open(path)?);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::parse(path, e.to_string()))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::parse(path, e.to_string()))?;
        rows.push(rec.iter().map(|s| s.trim().to_string()).collect());
    }
    if header.len() < 2 {
        return Err(Error::parse(path, "expected an id column and at least one data column"));
    }
    if rows.is_empty() {
        return Err(Error::parse(path, "no data rows"));
    }
    Ok((header, rows))
}

fn parse_number(path: &Path, cell: &str, line: usize, col: &str) -> Result<f64> {
    cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
        Error::parse(
            path,
            format!("line {line}, column `{col}`: `{cell}` is not a finite number"),
        )
    })
}

/// Expression matrix stored genes × samples: the header holds the sample ids,
/// the first column the feature ids. Returned as samples × features.
pub fn read_expression_csv(path: &Path) -> Result<FeatureMatrix> {
    let (header, rows) = read_csv_table(path)?;
    let sample_ids = header[1..].to_vec();
    let mut feature_ids = Vec::with_capacity(rows.len());
    let mut values = Matrix::zeros(sample_ids.len(), rows.len());
    for (g, row) in rows.iter().enumerate() {
        feature_ids.push(row[0].clone());
        for (s, cell) in row[1..].iter().enumerate() {
            values[(s, g)] = parse_number(path, cell, g + 2, &sample_ids[s])?;
        }
    }
    FeatureMatrix::new(values, sample_ids, feature_ids).map_err(|e| Error::parse(path, e.to_string()))
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell.eq_ignore_ascii_case("na") || cell.eq_ignore_ascii_case("nan")
}

/// Response matrix with cell lines as rows and drugs as columns. Empty,
/// `NA` and `NaN` cells are missing.
pub fn read_response_csv(path: &Path) -> Result<ResponseMatrix> {
    let (header, rows) = read_csv_table(path)?;
    let col_ids = header[1..].to_vec();
    let (n, c) = (rows.len(), col_ids.len());
    let mut values = Matrix::zeros(n, c);
    let mut mask = vec![false; n * c];
    let mut row_ids = Vec::with_capacity(n);
    for (i, row) in rows.iter().enumerate() {
        row_ids.push(row[0].clone());
        for (j, cell) in row[1..].iter().enumerate() {
            if !is_missing(cell) {
                values[(i, j)] = parse_number(path, cell, i + 2, &col_ids[j])?;
                mask[i * c + j] = true;
            }
        }
    }
    ResponseMatrix::new(values, mask, row_ids, col_ids).map_err(|e| Error::parse(path, e.to_string()))
}

/// Writes a response matrix in the format read by [`read_response_csv`],
/// leaving unobserved cells empty.
pub fn write_response_csv(path: &Path, y: &ResponseMatrix, id_header: &str) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec![id_header.to_string()];
    header.extend(y.col_ids.iter().cloned());
    write_record(&mut w, path, &header)?;
    for i in 0..y.nrows() {
        let mut rec = vec![y.row_ids[i].clone()];
        rec.extend((0..y.ncols()).map(|j| {
            if y.is_observed(i, j) {
                format_f64(y.values[(i, j)])
            } else {
                String::new()
            }
        }));
        write_record(&mut w, path, &rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Tab-separated gene sets: name, description, then one or more genes.
pub fn read_gmt(path: &Path) -> Result<Vec<GeneSet>> {
    let mut sets = Vec::new();
    for (ln, line) in read_lines(path)?.iter().enumerate() {
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 3 {
            return Err(Error::parse(
                path,
                format!("line {}: expected name, description and at least one gene", ln + 1),
            ));
        }
        let genes: Vec<String> = fields[2..]
            .iter()
            .map(|g| g.trim())
            .filter(|g| !g.is_empty())
            .map(str::to_string)
            .collect();
        if fields[0].trim().is_empty() || genes.is_empty() {
            return Err(Error::parse(
                path,
                format!("line {}: empty set name or gene list", ln + 1),
            ));
        }
        sets.push(GeneSet {
            name: fields[0].trim().to_string(),
            description: fields[1].to_string(),
            genes,
        });
    }
    Ok(sets)
}

/// One name per line. Blank lines and lines starting with `#` are skipped.
pub fn read_name_list(path: &Path) -> Result<Vec<String>> {
    Ok(read_lines(path)?
        .iter()
        .map(|l| l.trim())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

/// Two tab-separated columns, drug then target. A first line of
/// `drug<TAB>target` is treated as a header.
pub fn read_drug_targets(path: &Path) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (ln, line) in read_lines(path)?.iter().enumerate() {
        let line = line.trim_end();
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.splitn(2, '\t');
        let drug = parts.next().unwrap_or("").trim();
        let target = parts
            .next()
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .ok_or_else(|| Error::parse(path, format!("line {}: expected `drug<TAB>target`", ln + 1)))?;
        if ln == 0 && drug.eq_ignore_ascii_case("drug") && target.eq_ignore_ascii_case("target") {
            continue;
        }
        map.insert(drug.to_string(), target.to_string());
    }
    Ok(map)
}

/// Shortest representation that parses back to the same value.
pub fn format_f64(v: f64) -> String {
    format!("{v:?}")
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(f))
}

fn write_record(w: &mut csv::Writer<File>, path: &Path, rec: &[String]) -> Result<()> {
    w.write_record(rec).map_err(|e| Error::parse(path, e.to_string()))
}

/// Dense matrix with optional row and column labels.
pub fn write_matrix_csv(path: &Path, m: &Matrix, row_ids: Option<&[String]>, col_ids: Option<&[String]>) -> Result<()> {
    let mut w = csv_writer(path)?;
    if let Some(cols) = col_ids {
        let mut header = Vec::with_capacity(cols.len() + 1);
        if row_ids.is_some() {
            header.push(String::new());
        }
        header.extend(cols.iter().cloned());
        write_record(&mut w, path, &header)?;
    }
    for i in 0..m.nrows() {
        let mut rec = Vec::with_capacity(m.ncols() + 1);
        if let Some(rows) = row_ids {
            rec.push(rows[i].clone());
        }
        rec.extend(m.row(i).iter().map(|&v| format_f64(v)));
        write_record(&mut w, path, &rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Unlabelled numeric CSV, one matrix row per line.
pub fn read_matrix_csv(path: &Path) -> Result<Matrix> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(open(path)?);
    let mut data = Vec::new();
    let mut ncols = None;
    for (ln, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::parse(path, e.to_string()))?;
        ncols.get_or_insert(rec.len());
        for cell in rec.iter() {
            data.push(parse_number(path, cell.trim(), ln + 1, "-")?);
        }
    }
    let ncols = ncols.ok_or_else(|| Error::parse(path, "empty matrix file"))?;
    Ok(Matrix::from_row_slice(data.len() / ncols, ncols, &data))
}

/// Writes `contents` to `path`, mapping failures to an I/O error naming it.
pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn expression_is_transposed() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "e.csv", "gene,s1,s2,s3\ng1,1,2,3\ng2,4,5,6\n");
        let fm = read_expression_csv(&p).unwrap();
        assert_eq!(fm.sample_ids(), ["s1", "s2", "s3"]);
        assert_eq!(fm.feature_ids(), ["g1", "g2"]);
        assert_eq!(fm.values()[(2, 1)], 6.0);
    }

    #[test]
    fn expression_rejects_blank_cells() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "e.csv", "gene,s1,s2\ng1,1,\n");
        let err = read_expression_csv(&p).unwrap_err();
        assert!(err.to_string().contains("e.csv"));
    }

    #[test]
    fn response_missing_cells() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "y.csv", "cell,d1,d2\nc1,0.5,\nc2,NA,-1e-3\n");
        let y = read_response_csv(&p).unwrap();
        assert!(y.is_observed(0, 0));
        assert!(!y.is_observed(0, 1));
        assert!(!y.is_observed(1, 0));
        assert_eq!(y.values[(1, 1)], -1e-3);

        let out = dir.path().join("out.csv");
        write_response_csv(&out, &y, "cell").unwrap();
        assert_eq!(read_response_csv(&out).unwrap(), y);
    }

    #[test]
    fn gmt_and_lists() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "s.gmt", "KEGG_MAPK\thttp://x\tA\tB\n\nREACTOME_EGFR\tdesc\tC\n");
        let sets = read_gmt(&p).unwrap();
        assert_eq!(sets.len(), 2);
        assert_eq!(sets[0].genes, vec!["A", "B"]);
        let bad = write(&dir, "bad.gmt", "ONLY_NAME\tdesc\n");
        assert!(read_gmt(&bad).is_err());

        let l = write(&dir, "sel.txt", "# chosen\nKEGG_MAPK\n\n  REACTOME_EGFR \n");
        assert_eq!(read_name_list(&l).unwrap(), vec!["KEGG_MAPK", "REACTOME_EGFR"]);

        let t = write(&dir, "t.tsv", "drug\ttarget\nd1\tMEK1/2\nd2\tEGFR\n");
        let m = read_drug_targets(&t).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m["d1"], "MEK1/2");
    }

    #[test]
    fn matrix_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let m = Matrix::from_row_slice(2, 2, &[0.1, 1.0 / 3.0, -2e-300, 12345.678901234567]);
        let p = dir.path().join("m.csv");
        write_matrix_csv(&p, &m, None, None).unwrap();
        assert_eq!(read_matrix_csv(&p).unwrap(), m);
    }

    #[test]
    fn missing_file_names_path() {
        let err = read_gmt(Path::new("/nonexistent/sets.gmt")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/sets.gmt"));
    }
}

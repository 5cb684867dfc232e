/// A frame label with its display name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Frame {
    pub id: u8,
    pub name: &'static str,
}

const RAW_FRAMES: [Frame; 9] = [
    Frame { id: 1, name: "2nd Amendment" },
    Frame { id: 2, name: "Gun Control/Regulation" },
    Frame { id: 3, name: "Politics" },
    Frame { id: 4, name: "Mental Health" },
    Frame { id: 5, name: "School/Public Space Safety" },
    Frame { id: 6, name: "Race/Ethnicity" },
    Frame { id: 7, name: "Public Opinion" },
    Frame { id: 8, name: "Society/Culture" },
    Frame { id: 9, name: "Economic Consequences" },
];

const GROUPED_FRAMES: [Frame; 3] = [
    Frame { id: 1, name: "Political Issues" },
    Frame { id: 2, name: "Public Services" },
    Frame { id: 3, name: "Cultural and Societal Issues" },
];

/// raw frame id - 1 -> grouped frame id
const GROUPING: [u8; 9] = [1, 1, 1, 2, 2, 3, 3, 3, 3];

/// The nine Gun Violence Frame Corpus frames and their reduction to three
/// higher-level frames.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameTaxonomy {
    raw: &'static [Frame],
    grouped: &'static [Frame],
    mapping: &'static [u8],
}

impl Default for FrameTaxonomy {
    fn default() -> Self {
        Self::gvfc()
    }
}

impl FrameTaxonomy {
    pub fn gvfc() -> Self {
        Self {
            raw: &RAW_FRAMES,
            grouped: &GROUPED_FRAMES,
            mapping: &GROUPING,
        }
    }

    pub fn raw_frames(&self) -> &[Frame] {
        self.raw
    }

    pub fn grouped_frames(&self) -> &[Frame] {
        self.grouped
    }

    pub fn raw_count(&self) -> u8 {
        self.raw.len() as u8
    }

    pub fn grouped_count(&self) -> u8 {
        self.grouped.len() as u8
    }

    /// Number of frames in the label space of a corpus in the given state.
    pub fn frame_count(&self, grouped: bool) -> u8 {
        if grouped {
            self.grouped_count()
        } else {
            self.raw_count()
        }
    }

    /// Maps a raw frame id onto its grouped frame.
    pub fn group_of(&self, raw: u8) -> Option<u8> {
        raw.checked_sub(1)
            .and_then(|i| self.mapping.get(i as usize))
            .copied()
    }

    pub fn name(&self, frame: u8, grouped: bool) -> Option<&'static str> {
        let frames = if grouped { self.grouped } else { self.raw };
        frames.iter().find(|f| f.id == frame).map(|f| f.name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mapping_is_total_and_surjective() {
        let tax = FrameTaxonomy::gvfc();
        let mut hit = [false; 3];
        for raw in 1..=9 {
            let g = tax.group_of(raw).unwrap();
            assert!((1..=3).contains(&g));
            hit[g as usize - 1] = true;
        }
        assert!(hit.iter().all(|&h| h));
        assert_eq!(tax.group_of(0), None);
        assert_eq!(tax.group_of(10), None);
    }

    #[test]
    fn grouping_follows_political_public_cultural_split() {
        let tax = FrameTaxonomy::gvfc();
        let groups: Vec<u8> = (1..=9).map(|r| tax.group_of(r).unwrap()).collect();
        assert_eq!(groups, vec![1, 1, 1, 2, 2, 3, 3, 3, 3]);
        assert_eq!(tax.name(3, false), Some("Politics"));
        assert_eq!(tax.name(1, true), Some("Political Issues"));
        assert_eq!(tax.name(2, true), Some("Public Services"));
        assert_eq!(tax.name(3, true), Some("Cultural and Societal Issues"));
    }
}

use csanno::workflow::Role;

/// Authenticated endpoints, for the authorization table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Endpoint {
    /// `DELETE /auth`
    Logout,
    /// `GET /tasks/next`
    NextTask,
    /// `POST /tasks/{id}/annotations`
    SubmitAnnotations,
    /// `GET /batches/{id}/report`
    BatchReport,
    /// `GET /corpus/export`
    CorpusExport,
    /// `GET|POST /crowd/quiz`
    CrowdQuiz,
    /// `/crowd/jobs` and `/crowd/labels`
    CrowdJobs,
}

impl Endpoint {
    pub const ALL: &'static [Endpoint] = &[
        Endpoint::Logout,
        Endpoint::NextTask,
        Endpoint::SubmitAnnotations,
        Endpoint::BatchReport,
        Endpoint::CorpusExport,
        Endpoint::CrowdQuiz,
        Endpoint::CrowdJobs,
    ];
}

const ANYONE: &[Role] = &[Role::SuperUser, Role::LeadAnnotator, Role::Annotator];
const ANNOTATORS: &[Role] = &[Role::Annotator];
const MANAGERS: &[Role] = &[Role::SuperUser, Role::LeadAnnotator];

/// Roles allowed on each endpoint. `POST /auth` is open to everyone.
pub const ACCESS: &[(Endpoint, &[Role])] = &[
    (Endpoint::Logout, ANYONE),
    (Endpoint::NextTask, ANNOTATORS),
    (Endpoint::SubmitAnnotations, ANNOTATORS),
    (Endpoint::BatchReport, MANAGERS),
    (Endpoint::CorpusExport, MANAGERS),
    (Endpoint::CrowdQuiz, MANAGERS),
    (Endpoint::CrowdJobs, MANAGERS),
];

pub fn allowed(endpoint: Endpoint, role: Role) -> bool {
    ACCESS
        .iter()
        .any(|(e, roles)| *e == endpoint && roles.contains(&role))
}

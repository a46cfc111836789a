use super::{ChatRequest, Result};

/// A chat-completion backend. Implementations return the assistant message
/// content for a request.
pub trait ChatBackend: Send + Sync {
    /// Stable identifier recorded in provenance and run manifests.
    fn id(&self) -> String;

    fn complete(&self, request: &ChatRequest) -> Result<String>;
}

impl<B: ChatBackend + ?Sized> ChatBackend for std::sync::Arc<B> {
    fn id(&self) -> String {
        (**self).id()
    }

    fn complete(&self, request: &ChatRequest) -> Result<String> {
        (**self).complete(request)
    }
}
